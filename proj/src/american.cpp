#include "exchopt/american.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "exchopt/errors.hpp"
#include "exchopt/mc.hpp"
#include "exchopt/numerics.hpp"

namespace exchopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct HFactor {
    double h;
    double hprime_over_h;
};

HFactor h_factor(double tau) {
    const double h = -std::expm1(-tau);
    return {h, std::exp(-tau) / h};
}

// Generator jump part applied to r^alpha at r, divided by r^alpha, evaluated
// term by term on the raw power functions.
double generator_jump_part(const TiltedJumpLaw& law, double alpha, double r) {
    const double ra = std::pow(r, alpha);
    auto integrand = [&](double z) {
        const double rz = r * std::exp(z);
        return std::pow(rz, alpha) - ra - r * alpha * std::pow(r, alpha - 1.0) * std::expm1(z);
    };
    double s = 0.0;
    if (const auto* a = std::get_if<TiltedAtoms>(&law)) {
        for (const auto& p : a->points) s += p.lambda * integrand(p.z);
    } else if (const auto* g = std::get_if<TiltedGaussian>(&law)) {
        static const numerics::QuadratureRule gh = numerics::gauss_hermite(64);
        const double scale = std::sqrt(2.0 * g->var);
        double acc = 0.0;
        for (std::size_t i = 0; i < gh.nodes.size(); ++i)
            acc += gh.weights[i] * integrand(g->mean + scale * gh.nodes[i]);
        s = g->lambda * acc / std::sqrt(std::numbers::pi);
    }
    return s / ra;
}

} // namespace

double alpha_equation(const ReducedModel& rm, double tau, double alpha) {
    const double s2 = rm.sigma * rm.sigma;
    const auto hf = h_factor(tau);
    return 0.5 * s2 * alpha * alpha - (0.5 * s2 + rm.kappa) * alpha +
           jump_mgf_minus_one(rm.jumps, alpha) - rm.q1 - hf.hprime_over_h;
}

double alpha_equation_ratio(const ReducedModel& rm, double tau, double alpha, double probe) {
    const double s2 = rm.sigma * rm.sigma;
    const auto hf = h_factor(tau);
    // (s^2 r^2 / 2) d^2/dr^2 r^alpha / r^alpha
    const double diffusion = 0.5 * s2 * alpha * (alpha - 1.0);
    return diffusion + generator_jump_part(rm.jumps, alpha, probe) - rm.q1 - hf.hprime_over_h;
}

AlphaRoot solve_alpha(const ReducedModel& rm, double tau) {
    if (!(tau > 0.0)) fail(ErrorCode::InvalidParameter, fmt::format("tau = {}", tau));
    if (rm.q1 < 0.0) fail(ErrorCode::InvalidParameter, fmt::format("q1 = {}", rm.q1));
    const double s2 = rm.sigma * rm.sigma;
    const auto hf = h_factor(tau);
    const double c = rm.q1 + hf.hprime_over_h;

    auto f = [&](double a) { return alpha_equation(rm, tau, a); };
    auto fdf = [&](double a) {
        const double df = s2 * a - (0.5 * s2 + rm.kappa) + jump_moment(rm.jumps, 1, a);
        return std::pair{f(a), df};
    };

    // f(0) = -c < 0 and f is convex with f(-inf) = +inf.
    double lo = 0.5 * (1.0 - std::sqrt(1.0 + 8.0 * c / s2));
    int expansions = 0;
    while (!(f(lo) > 0.0)) {
        lo *= 2.0;
        if (++expansions > 60 || !std::isfinite(lo))
            fail(ErrorCode::BracketNotFound, fmt::format("no sign change of f below 0 (tau = {})", tau));
    }
    // From the left of the root Newton on a convex function is monotone.
    const double ftol = 1e-15 * std::max(1.0, c);
    auto res = numerics::safeguarded_newton(fdf, lo, 0.0, lo, ftol, 200);

    AlphaRoot out;
    out.alpha = res.x;
    out.residual = res.fx;
    out.h = hf.h;
    out.hprime_over_h = hf.hprime_over_h;
    return out;
}

ApproxSolution solve_boundary_at(double t, const ReducedModel& rm, const QuadratureSpec& spec) {
    const double tau = rm.T - t;
    if (!(tau > 0.0)) fail(ErrorCode::InvalidParameter, fmt::format("t = {} not before T", t));
    if (!(rm.q1 > 0.0))
        fail(ErrorCode::NoBoundaryRoot,
             fmt::format("q1 = {}: the approximation has no exercise boundary", rm.q1));

    const AlphaRoot ar = solve_alpha(rm, tau);
    const double alpha = ar.alpha;
    const double Mt = rm.strike_at(t);

    auto residual = [&](double b) {
        const auto q = european_put_ratio(b, t, rm, spec);
        return q.price - (b / alpha) * (1.0 + q.delta_r) - (Mt - b);
    };

    const double lo = 1e-10 * Mt;
    const double hi = Mt;
    const double g_lo = residual(lo);
    const double g_hi = residual(hi);
    if ((g_lo > 0.0) == (g_hi > 0.0) && g_lo != 0.0 && g_hi != 0.0)
        fail(ErrorCode::NoBoundaryRoot,
             fmt::format("residual has no sign change on ({}, {}): g = {}, {} at t = {}", lo, hi,
                         g_lo, g_hi, t));

    auto root = numerics::bisect(residual, lo, hi, g_lo, g_hi, 1e-12 * Mt);
    double b = root.x;
    double gb = root.fx;
    for (int step = 0; step < 2 && gb != 0.0; ++step) {
        const double dh = 1e-6 * b;
        const double slope = (residual(b + dh) - residual(b - dh)) / (2.0 * dh);
        if (!(slope != 0.0) || !std::isfinite(slope)) break;
        const double cand = b - gb / slope;
        if (!(cand > lo && cand < hi)) break;
        const double gc = residual(cand);
        if (std::abs(gc) >= std::abs(gb)) break;
        b = cand;
        gb = gc;
    }

    const auto q = european_put_ratio(b, t, rm, spec);
    ApproxSolution sol;
    sol.t = t;
    sol.b = b;
    sol.alpha_root = ar;
    sol.european_at_b = q.price;
    sol.delta_at_b = q.delta_r;
    sol.A = -(1.0 + q.delta_r) / (ar.h * alpha * std::pow(b, alpha - 1.0));
    const double premium_at_b = ar.h * sol.A * std::pow(b, alpha);
    sol.value_match_residual = q.price + premium_at_b - (Mt - b);
    sol.smooth_paste_residual = q.delta_r + alpha * ar.h * sol.A * std::pow(b, alpha - 1.0) + 1.0;
    return sol;
}

double approx_american_ratio(double r, double t, const ReducedModel& rm, const ApproxSolution& sol,
                             const QuadratureSpec& spec) {
    if (t >= rm.T) return std::max(rm.strike_at(rm.T) - r, 0.0);
    if (r <= sol.b) return rm.strike_at(t) - r;
    const double h = -std::expm1(-(rm.T - t));
    return european_put_ratio(r, t, rm, spec).price +
           h * sol.A * std::pow(r, sol.alpha_root.alpha);
}

double jump_put_integral(const TiltedJumpLaw& law, double M, double S) {
    if (const auto* a = std::get_if<TiltedAtoms>(&law)) {
        double s = 0.0;
        for (const auto& p : a->points) s += p.lambda * std::max(M - S * std::exp(p.z), 0.0);
        return s;
    }
    if (const auto* g = std::get_if<TiltedGaussian>(&law)) {
        if (S <= 0.0) return g->lambda * M;
        if (g->var == 0.0) return g->lambda * std::max(M - S * std::exp(g->mean), 0.0);
        const double sd = std::sqrt(g->var);
        const double c = std::log(M / S);
        const double p_below = numerics::normal_cdf((c - g->mean) / sd);
        const double e_below =
            std::exp(g->mean + 0.5 * g->var) * numerics::normal_cdf((c - g->mean - g->var) / sd);
        return g->lambda * (M * p_below - S * e_below);
    }
    return 0.0;
}

double terminal_boundary(const ReducedModel& rm) {
    if (!(rm.q1 > 0.0))
        fail(ErrorCode::InvalidParameter, fmt::format("terminal boundary needs q1 > 0, got {}", rm.q1));
    const double M = rm.strike_at(rm.T);
    auto F = [&](double S) { return jump_put_integral(rm.jumps, M, S) - rm.q1 * (M - S); };
    const double f0 = F(0.0);
    const double fM = F(M);
    if (fM == 0.0) return M;
    if ((f0 > 0.0) == (fM > 0.0) || f0 == 0.0)
        fail(ErrorCode::NoRootInInterval,
             fmt::format("residual has the same sign at S0 = 0 ({}) and S0 = M ({})", f0, fM));
    return numerics::bisect(F, 0.0, M, f0, fM, 1e-15 * M).x;
}

ExerciseBoundary build_boundary_at(const ReducedModel& rm, std::span<const double> times,
                                   const QuadratureSpec& spec) {
    ExerciseBoundary out;
    out.grid.reserve(times.size());
    for (double t : times) {
        BoundaryPoint p;
        p.t = t;
        try {
            const auto sol = solve_boundary_at(t, rm, spec);
            p.b = sol.b;
            p.A = sol.A;
            p.alpha = sol.alpha_root.alpha;
            p.converged = true;
        } catch (const PricingError& e) {
            if (e.code() != ErrorCode::NoBoundaryRoot) throw;
            p.b = p.A = p.alpha = kNaN;
            ++out.gaps;
        }
        out.grid.push_back(p);
    }
    try {
        out.S0 = terminal_boundary(rm);
    } catch (const PricingError&) {
        out.S0.reset();
    }

    const BoundaryPoint* prev = nullptr;
    for (const auto& p : out.grid) {
        if (!p.converged) continue;
        if (prev) {
            out.max_adjacent_jump = std::max(out.max_adjacent_jump, std::abs(p.b - prev->b));
            if (p.b < prev->b - 1e-8) {
                out.non_decreasing = false;
                ++out.monotonicity_violations;
            }
        }
        prev = &p;
    }
    return out;
}

ExerciseBoundary build_boundary_curve(const ReducedModel& rm, int n_points,
                                      const QuadratureSpec& spec) {
    if (n_points < 2) fail(ErrorCode::InvalidParameter, fmt::format("n_points = {}", n_points));
    const double delta = rm.T / (10.0 * n_points);
    const double last = rm.T - delta;
    std::vector<double> times(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) times[i] = last * i / (n_points - 1);
    return build_boundary_at(rm, times, spec);
}

AmericanQuote american_price(double S1, double S2, double t, const ReducedModel& rm,
                             const QuadratureSpec& spec) {
    AmericanQuote out;
    out.ratio = ratio_from_spots(S1, S2, t, rm);
    if (!(out.ratio > 0.0)) fail(ErrorCode::InvalidParameter, "S1 must be positive");
    const double scale = numeraire_scale(S2, t, rm);
    const double ue = european_put_ratio(out.ratio, t, rm, spec).price;
    out.european = scale * ue;
    try {
        out.boundary = solve_boundary_at(t, rm, spec);
    } catch (const PricingError& e) {
        if (e.code() != ErrorCode::NoBoundaryRoot) throw;
        out.exercise_never_optimal = true;
        out.price = out.european;
        return out;
    }
    const auto& sol = *out.boundary;
    if (out.ratio <= sol.b) {
        out.in_stopping_region = true;
        out.price = scale * (rm.strike_at(t) - out.ratio);
        return out;
    }
    out.premium_normalized = sol.alpha_root.h * sol.A * std::pow(out.ratio, sol.alpha_root.alpha);
    out.price = scale * (ue + out.premium_normalized);
    return out;
}

PremiumBreakdown premium_decomposition(double S1, double S2, double t, const ReducedModel& rm,
                                       const MCConfig& cfg, const QuadratureSpec& spec) {
    validate(cfg);
    PremiumBreakdown out;
    const double r0 = ratio_from_spots(S1, S2, t, rm);
    if (!(r0 > 0.0)) fail(ErrorCode::InvalidParameter, "S1 must be positive");
    const double scale = numeraire_scale(S2, t, rm);
    out.european = scale * european_put_ratio(r0, t, rm, spec).price;

    const std::size_t n = cfg.n_steps;
    std::vector<double> times(n);
    for (std::size_t j = 0; j < n; ++j) times[j] = t + (rm.T - t) * static_cast<double>(j) / n;
    const ExerciseBoundary boundary = build_boundary_at(rm, times, spec);
    if (boundary.gaps == static_cast<int>(n)) {
        out.exercise_never_optimal = true;
        out.total_american = out.european;
        return out;
    }

    const PathBatch paths = simulate_ratio_paths(rm, r0, t, rm.T, cfg);
    const PremiumTerms terms = estimate_premium_terms(paths, boundary, rm, spec);
    out.dividend_term = scale * terms.dividend.estimate;
    out.dividend_stderr = scale * terms.dividend.std_error;
    out.jump_term = scale * terms.jump.estimate;
    out.jump_stderr = scale * terms.jump.std_error;
    out.total_american = out.european + scale * terms.combined.estimate;
    out.total_stderr = scale * terms.combined.std_error;
    return out;
}

} // namespace exchopt
