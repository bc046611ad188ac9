#include "exchopt/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "exchopt/american.hpp"
#include "exchopt/charfn.hpp"
#include "exchopt/errors.hpp"
#include "exchopt/mc.hpp"

namespace exchopt {

namespace reference {

TwoAssetModel margrabe() {
    TwoAssetModel m;
    m.sigma1 = 0.2;
    m.sigma2 = 0.3;
    m.rho = 0.5;
    m.q1 = 0.0;
    m.q2 = 0.0;
    m.r = 0.0;
    m.K = 1.0;
    m.T = 1.0;
    return m;
}

TwoAssetModel jump_free() {
    auto m = margrabe();
    m.q1 = 0.05;
    m.q2 = 0.05;
    m.r = 0.05;
    return m;
}

TwoAssetModel single_atom() {
    auto m = jump_free();
    m.jumps = AtomJumps{{{-0.2, 0.0, 0.1}}};
    return m;
}

TwoAssetModel point_mass() {
    auto m = jump_free();
    m.jumps = AtomJumps{{{0.1, -0.1, 0.3}}};
    return m;
}

TwoAssetModel gaussian() {
    auto m = jump_free();
    m.jumps = GaussianJumps{1.0, {0.0, 0.0}, {{{0.04, 0.0}, {0.0, 0.04}}}};
    return m;
}

std::vector<TwoAssetModel> corpus() {
    return {margrabe(), jump_free(), single_atom(), point_mass(), gaussian()};
}

} // namespace reference

namespace {

std::string g17(double x) { return fmt::format("{:.17g}", x); }

double normal_cdf_erfc(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

MCConfig mc_config(const ValidationOptions& opts, std::size_t paths) {
    MCConfig cfg;
    cfg.n_paths = paths;
    cfg.n_steps = opts.n_steps;
    cfg.seed = opts.seed;
    return cfg;
}

CheckResult margrabe_equivalence() {
    CheckResult c{1, "margrabe_equivalence", false, {}};
    const auto rm = reduce(reference::margrabe());
    const double price = european_price_physical(100.0, 100.0, 0.0, rm);
    const double s = std::sqrt(0.2 * 0.2 + 0.3 * 0.3 - 2 * 0.5 * 0.2 * 0.3);
    const double d1 = 0.5 * s;
    const double closed = 100.0 * (normal_cdf_erfc(d1) - normal_cdf_erfc(d1 - s));
    const double err = std::abs(price - closed);
    c.passed = err < 1e-6;
    c.detail = fmt::format("fourier={} closed_form={} abs_err={} tol=1e-06", g17(price), g17(closed),
                           g17(err));
    return c;
}

CheckResult charfn_normalization() {
    CheckResult c{2, "charfn_normalization", true, {}};
    double worst_zero = 0.0, worst_mart = 0.0, worst_mod = 0.0;
    for (const auto& m : reference::corpus()) {
        const auto rm = reduce(m);
        for (double tau : {0.1, 0.5, 1.0, 2.0}) {
            worst_zero = std::max(worst_zero, std::abs(char_fn(0.0, tau, rm) - 1.0));
            worst_mart = std::max(worst_mart, std::abs(char_fn(cplx(0.0, -1.0), tau, rm) - 1.0));
            for (int k = 1; k <= 1000; ++k)
                worst_mod = std::max(worst_mod, std::abs(char_fn(0.1 * k, tau, rm)));
        }
    }
    c.passed = worst_zero < 1e-12 && worst_mart < 1e-12 && worst_mod <= 1.0;
    c.detail = fmt::format("max|f(0)-1|={} max|f(-i)-1|={} max|f(u)|={} tol=1e-12", g17(worst_zero),
                           g17(worst_mart), g17(worst_mod));
    return c;
}

CheckResult fourier_vs_mc(const ValidationOptions& opts) {
    CheckResult c{3, "fourier_vs_monte_carlo", true, {}};
    const auto cfg = mc_config(opts, 2 * opts.n_paths);
    double worst = 0.0;
    int failures = 0;
    for (const auto& m : {reference::jump_free(), reference::single_atom(), reference::gaussian()}) {
        const auto rm = reduce(m);
        for (const auto& [r, t] : {std::pair{0.9, 0.0}, std::pair{1.0, 0.5}, std::pair{1.15, 0.75}}) {
            const double exact = european_put_ratio(r, t, rm).price;
            const auto mc = mc_european(rm, r, t, cfg).put;
            const double z = std::abs(mc.estimate - exact) / mc.std_error;
            worst = std::max(worst, z);
            if (!(z <= 3.0)) ++failures;
        }
    }
    c.passed = failures == 0;
    c.detail = fmt::format("points=9 paths={} max_abs_err_in_stderr={} failures={} tol=3", cfg.n_paths,
                           g17(worst), failures);
    return c;
}

CheckResult alpha_root() {
    CheckResult c{4, "alpha_root", true, {}};
    const auto rm = reduce(reference::jump_free());
    const double tau = 1.0;
    const double s2 = rm.sigma * rm.sigma;
    const double hp = std::exp(-tau) / -std::expm1(-tau);
    const double closed = 0.5 * (1.0 - std::sqrt(1.0 + 8.0 * (rm.q1 + hp) / s2));
    const double alpha = solve_alpha(rm, tau).alpha;
    const double err = std::abs(alpha - closed);
    double worst_residual = 0.0, max_alpha = -std::numeric_limits<double>::infinity();
    for (const auto& m : reference::corpus()) {
        const auto r = reduce(m);
        for (double t : {0.01, 0.25, 1.0, 2.0}) {
            const auto root = solve_alpha(r, t);
            worst_residual = std::max(worst_residual, std::abs(alpha_equation(r, t, root.alpha)));
            max_alpha = std::max(max_alpha, root.alpha);
        }
    }
    c.passed = err < 1e-10 && worst_residual < 1e-12 && max_alpha < 0.0;
    c.detail = fmt::format("alpha={} closed_form={} abs_err={} max|f(alpha)|={} max_alpha={}",
                           g17(alpha), g17(closed), g17(err), g17(worst_residual), g17(max_alpha));
    return c;
}

CheckResult terminal_boundary_check() {
    CheckResult c{5, "terminal_boundary", true, {}};
    const auto rm = reduce(reference::jump_free());
    const double s_none = terminal_boundary(rm);
    const bool exact = s_none == rm.strike_at(rm.T);

    const double z = -0.2, lam = 0.02, q1 = 0.05;
    const auto atom = make_reduced(0.2, TiltedAtoms{{{z, lam}}}, q1, q1, 1.0, 1.0);
    const double s_atom = terminal_boundary(atom);
    const double closed = (q1 - lam) / (q1 - lam * std::exp(z));
    const double err = std::abs(s_atom - closed);

    bool no_root = false;
    try {
        terminal_boundary(make_reduced(0.2, TiltedAtoms{{{z, 0.1}}}, q1, q1, 1.0, 1.0));
    } catch (const PricingError& e) {
        no_root = e.code() == ErrorCode::NoRootInInterval;
    }
    c.passed = exact && err < 1e-8 && no_root;
    c.detail = fmt::format("none_S0={} strike={} atom_S0={} closed_form={} abs_err={} "
                           "no_root_reported={}",
                           g17(s_none), g17(rm.strike_at(rm.T)), g17(s_atom), g17(closed), g17(err),
                           no_root ? 1 : 0);
    return c;
}

CheckResult boundary_properties() {
    CheckResult c{6, "boundary_properties", true, {}};
    std::string detail;
    for (const auto& [name, m] : {std::pair{"jump_free", reference::jump_free()},
                                  std::pair{"point_mass", reference::point_mass()}}) {
        const auto rm = reduce(m);
        const auto curve = build_boundary_curve(rm, 64);
        double min_b = std::numeric_limits<double>::infinity();
        for (const auto& p : curve.grid) min_b = p.converged ? std::min(min_b, p.b) : -1.0;
        const double coarse = build_boundary_curve(rm, 32).max_adjacent_jump;
        const double fine = build_boundary_curve(rm, 128).max_adjacent_jump;
        const bool ok = min_b > 0.0 && curve.non_decreasing && curve.gaps == 0 && fine <= coarse;
        c.passed = c.passed && ok;
        detail += fmt::format("{}: min_b={} non_decreasing={} jump32={} jump128={}; ", name, g17(min_b),
                              curve.non_decreasing ? 1 : 0, g17(coarse), g17(fine));
    }
    detail.resize(detail.size() - 2);
    c.detail = detail;
    return c;
}

CheckResult dominance_and_limits() {
    CheckResult c{7, "american_dominance_and_limits", true, {}};
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& m : {reference::jump_free(), reference::point_mass()}) {
        const auto rm = reduce(m);
        for (double S1 : {60.0, 80.0, 100.0, 120.0, 150.0}) {
            for (double frac : {0.0, 0.25, 0.5, 0.75, 0.95}) {
                const auto q = american_price(S1, 100.0, frac * rm.T, rm);
                const double floor = std::max(std::max(rm.K * 100.0 - S1, 0.0), q.european);
                worst = std::min(worst, q.price - floor);
            }
        }
    }
    const bool dominance = worst >= -1e-8;

    const auto rm = reduce(reference::jump_free());
    const auto sol = solve_boundary_at(0.0, rm);
    const double r = 10.0 * sol.b;
    const double premium = sol.alpha_root.h * sol.A * std::pow(r, sol.alpha_root.alpha);
    const double european_atm = european_put_ratio(rm.strike_at(0.0), 0.0, rm).price;
    const double rel = premium / european_atm;
    c.passed = dominance && rel < 1e-6;
    c.detail = fmt::format("min(american-max(intrinsic,european))={} premium_at_10b={} "
                           "european_atm={} ratio={} tol=1e-06",
                           g17(worst), g17(premium), g17(european_atm), g17(rel));
    return c;
}

CheckResult decomposition_closure(const ValidationOptions& opts) {
    CheckResult c{8, "decomposition_closure", true, {}};
    const auto cfg = mc_config(opts, opts.n_paths);

    const auto rm = reduce(reference::point_mass());
    const auto pd = premium_decomposition(100.0, 100.0, 0.0, rm, cfg);
    const double am = american_price(100.0, 100.0, 0.0, rm).price;
    const double diff = std::abs(pd.total_american - am);
    const double tol = std::max(0.01 * am, 3.0 * pd.total_stderr);
    const bool closes = diff <= tol;

    const auto free = premium_decomposition(100.0, 100.0, 0.0, reduce(reference::jump_free()), cfg);
    const bool no_jump = free.jump_term == 0.0;
    const auto none = premium_decomposition(100.0, 100.0, 0.0, reduce(reference::margrabe()), cfg);
    const bool no_premium = none.dividend_term == 0.0 && none.jump_term == 0.0;

    c.passed = closes && no_jump && no_premium;
    c.detail = fmt::format("european={} dividend={} jump={} total={} stderr={} american={} "
                           "abs_diff={} tol={} jump_free_jump_term={} no_carry_terms={},{}",
                           g17(pd.european), g17(pd.dividend_term), g17(pd.jump_term),
                           g17(pd.total_american), g17(pd.total_stderr), g17(am), g17(diff), g17(tol),
                           g17(free.jump_term), g17(none.dividend_term), g17(none.jump_term));
    return c;
}

CheckResult lsmc_cross_validation(const ValidationOptions& opts) {
    CheckResult c{9, "lsmc_cross_validation", true, {}};
    const auto cfg = mc_config(opts, opts.n_paths);
    std::string detail;
    for (const auto& [name, m] : {std::pair{"jump_free", reference::jump_free()},
                                  std::pair{"single_atom", reference::single_atom()}}) {
        const auto rm = reduce(m);
        const double approx = american_price(100.0, 100.0, 0.0, rm).price;
        const auto ls = lsmc_american(rm, 1.0, 0.0, cfg);
        const double lsmc = 100.0 * ls.estimate;
        const double se = 100.0 * ls.std_error;
        const double diff = std::abs(approx - lsmc);
        const double tol = std::max(0.01 * lsmc, 3.0 * se);
        c.passed = c.passed && diff <= tol;
        detail += fmt::format("{}: approx={} lsmc={} stderr={} rel_diff={} tol={}; ", name, g17(approx),
                              g17(lsmc), g17(se), g17(diff / lsmc), g17(tol));
    }
    detail.resize(detail.size() - 2);
    c.detail = detail;
    return c;
}

} // namespace

namespace {

CheckResult dispatch(int id, const ValidationOptions& opts) {
    switch (id) {
    case 1: return margrabe_equivalence();
    case 2: return charfn_normalization();
    case 3: return fourier_vs_mc(opts);
    case 4: return alpha_root();
    case 5: return terminal_boundary_check();
    case 6: return boundary_properties();
    case 7: return dominance_and_limits();
    case 8: return decomposition_closure(opts);
    case 9: return lsmc_cross_validation(opts);
    default: fail(ErrorCode::InvalidParameter, fmt::format("unknown check {}", id));
    }
}

} // namespace

CheckResult run_check(int id, const ValidationOptions& opts) {
    if (id < 1 || id >= kCheckCount)
        fail(ErrorCode::InvalidParameter, fmt::format("unknown check {}", id));
    try {
        return dispatch(id, opts);
    } catch (const PricingError& e) {
        return {id, fmt::format("check_{}", id), false, fmt::format("error: {}", e.what())};
    }
}

CheckResult check_reproducibility(const ValidationOptions& opts,
                                  const std::vector<CheckResult>& first_run) {
    CheckResult c{10, "reproducibility", true, {}};
    int compared = 0;
    for (const auto& prev : first_run) {
        if (prev.id != 3 && prev.id != 8 && prev.id != 9) continue;
        const auto again = run_check(prev.id, opts);
        ++compared;
        if (again.detail != prev.detail || again.passed != prev.passed) c.passed = false;
    }
    c.passed = c.passed && compared == 3;
    c.detail = fmt::format("monte_carlo_checks_rerun={} identical={}", compared, c.passed ? 1 : 0);
    return c;
}

std::vector<CheckResult> run_validation(const ValidationOptions& opts,
                                        const std::function<void(const CheckResult&)>& progress) {
    std::vector<CheckResult> out;
    for (int id = 1; id < kCheckCount; ++id) {
        out.push_back(run_check(id, opts));
        if (progress) progress(out.back());
    }
    out.push_back(check_reproducibility(opts, out));
    if (progress) progress(out.back());
    return out;
}

} // namespace exchopt
