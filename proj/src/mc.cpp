#include "exchopt/mc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/os.h>

#include "exchopt/errors.hpp"
#include "exchopt/numerics.hpp"
#include "exchopt/rng.hpp"

namespace exchopt {

namespace {

// Stream ids for the LSMC evaluation set live far above any training stream.
constexpr std::uint64_t kEvaluationStreamOffset = 1ull << 40;

/// Splits [0, n) into contiguous chunks run on hardware threads.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(hw, std::max<std::size_t>(1, n / 4096));
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

struct StepSampler {
    double sigma;
    double drift; // per year, of the log-ratio
    double lambda;
    const TiltedJumpLaw* law;
    std::vector<double> cumulative; // atom selection

    explicit StepSampler(const ReducedModel& rm)
        : sigma(rm.sigma), drift(-rm.kappa - 0.5 * rm.sigma * rm.sigma),
          lambda(total_intensity(rm.jumps)), law(&rm.jumps) {
        if (const auto* a = std::get_if<TiltedAtoms>(law)) {
            double acc = 0.0;
            for (const auto& p : a->points) {
                acc += p.lambda;
                cumulative.push_back(acc / lambda);
            }
        }
    }

    double draw_jump(StreamRng& rng) const {
        if (const auto* a = std::get_if<TiltedAtoms>(law)) {
            const double u = rng.uniform();
            const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
            const std::size_t k =
                std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                      a->points.size() - 1);
            return a->points[k].z;
        }
        const auto& g = std::get<TiltedGaussian>(*law);
        return g.mean + std::sqrt(g.var) * rng.normal();
    }
};

std::vector<double> uniform_times(double t0, double T, std::size_t n_steps) {
    std::vector<double> times(n_steps + 1);
    for (std::size_t j = 0; j <= n_steps; ++j)
        times[j] = t0 + (T - t0) * static_cast<double>(j) / static_cast<double>(n_steps);
    times.back() = T;
    return times;
}

/// Drives one stream: fills `xa` (and `xb` for the antithetic partner) with
/// log-ratio values on `times`, recording jump marks when requested.
void simulate_stream(const StepSampler& sampler, StreamRng& rng, double x0,
                     std::span<const double> times, double* xa, double* xb,
                     std::vector<JumpMark>* marks) {
    xa[0] = x0;
    if (xb) xb[0] = x0;
    for (std::size_t j = 1; j < times.size(); ++j) {
        const double dt = times[j] - times[j - 1];
        const double diff = sampler.sigma * std::sqrt(dt) * rng.normal();
        double jump = 0.0;
        if (sampler.lambda > 0.0) {
            const unsigned count = rng.poisson(sampler.lambda * dt);
            for (unsigned c = 0; c < count; ++c) {
                const double when = times[j - 1] + dt * rng.uniform();
                const double z = sampler.draw_jump(rng);
                jump += z;
                if (marks) marks->push_back({when, z});
            }
        }
        const double base = sampler.drift * dt + jump;
        xa[j] = xa[j - 1] + base + diff;
        if (xb) xb[j] = xb[j - 1] + base - diff;
    }
}

void require_finite_activity(const ReducedModel& rm) {
    const double lam = total_intensity(rm.jumps);
    if (!std::isfinite(lam))
        fail(ErrorCode::UnsupportedJumpLaw, "simulation requires finite jump activity");
}

/// Streams every path through `on_path(index, log_ratio)`.
template <class Fn>
void for_each_path(const ReducedModel& rm, double r0, std::span<const double> times,
                   std::size_t n_paths, std::uint64_t seed, bool antithetic,
                   std::uint64_t stream_offset, Fn&& on_path) {
    require_finite_activity(rm);
    const StepSampler sampler(rm);
    const double x0 = std::log(r0);
    const std::size_t per_stream = antithetic ? 2 : 1;
    const std::size_t n_streams = (n_paths + per_stream - 1) / per_stream;
    parallel_for(n_streams, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> xa(times.size()), xb(times.size());
        for (std::size_t s = lo; s < hi; ++s) {
            StreamRng rng(seed, stream_offset + s);
            const std::size_t first = s * per_stream;
            const bool pair = antithetic && first + 1 < n_paths;
            simulate_stream(sampler, rng, x0, times, xa.data(), pair ? xb.data() : nullptr,
                            nullptr);
            on_path(first, std::span<const double>(xa));
            if (pair) on_path(first + 1, std::span<const double>(xb));
        }
    });
}

std::vector<double> basis(double x, int degree) {
    std::vector<double> v(static_cast<std::size_t>(degree) + 1);
    double p = 1.0;
    for (auto& e : v) {
        e = p;
        p *= x;
    }
    return v;
}

} // namespace

void validate(const MCConfig& cfg, bool pricing) {
    if (cfg.n_steps < 16)
        fail(ErrorCode::InvalidParameter, fmt::format("n_steps = {} (< 16)", cfg.n_steps));
    if (pricing && cfg.n_paths < 1000)
        fail(ErrorCode::InvalidParameter, fmt::format("n_paths = {} (< 1000)", cfg.n_paths));
    if (cfg.n_paths == 0) fail(ErrorCode::InvalidParameter, "n_paths = 0");
    if (cfg.basis_degree < 1 || cfg.basis_degree > 8)
        fail(ErrorCode::InvalidParameter, fmt::format("basis_degree = {}", cfg.basis_degree));
}

double PathBatch::ratio(std::size_t i, std::size_t j) const {
    return std::exp(log_ratio[i * n_times() + j]);
}

MCEstimate summarize(std::span<const double> samples, bool paired) {
    std::vector<double> folded;
    std::span<const double> xs = samples;
    if (paired && samples.size() >= 2) {
        folded.reserve(samples.size() / 2 + 1);
        std::size_t i = 0;
        for (; i + 1 < samples.size(); i += 2) folded.push_back(0.5 * (samples[i] + samples[i + 1]));
        if (i < samples.size()) folded.push_back(samples[i]);
        xs = folded;
    }
    const double n = static_cast<double>(xs.size());
    if (xs.empty()) return {};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

PathBatch simulate_ratio_paths(const ReducedModel& rm, double r0, double t0, double T,
                               const MCConfig& cfg) {
    validate(cfg, false);
    if (!(r0 > 0.0)) fail(ErrorCode::InvalidParameter, fmt::format("r0 = {}", r0));
    if (!(T > t0)) fail(ErrorCode::InvalidParameter, fmt::format("T = {} <= t0 = {}", T, t0));
    require_finite_activity(rm);

    PathBatch batch;
    batch.times = uniform_times(t0, T, cfg.n_steps);
    batch.n_paths = cfg.n_paths;
    batch.seed = cfg.seed;
    batch.antithetic = cfg.antithetic;
    batch.log_ratio.resize(cfg.n_paths * batch.n_times());
    batch.jump_marks.resize(cfg.n_paths);

    const StepSampler sampler(rm);
    const double x0 = std::log(r0);
    const std::size_t per_stream = cfg.antithetic ? 2 : 1;
    const std::size_t n_streams = (cfg.n_paths + per_stream - 1) / per_stream;
    const std::size_t nt = batch.n_times();
    parallel_for(n_streams, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            StreamRng rng(cfg.seed, s);
            const std::size_t first = s * per_stream;
            const bool pair = cfg.antithetic && first + 1 < cfg.n_paths;
            double* xa = batch.log_ratio.data() + first * nt;
            double* xb = pair ? xa + nt : nullptr;
            simulate_stream(sampler, rng, x0, batch.times, xa, xb, &batch.jump_marks[first]);
            if (pair) batch.jump_marks[first + 1] = batch.jump_marks[first];
        }
    });
    return batch;
}

EuropeanMC mc_european(const ReducedModel& rm, double r0, double t0, const MCConfig& cfg) {
    validate(cfg);
    if (!(r0 > 0.0)) fail(ErrorCode::InvalidParameter, fmt::format("r0 = {}", r0));
    const auto times = uniform_times(t0, rm.T, cfg.n_steps);
    const double M = rm.strike_at(rm.T);
    const double disc = std::exp(-rm.q1 * (rm.T - t0));
    std::vector<double> put(cfg.n_paths), call(cfg.n_paths), terminal(cfg.n_paths);
    for_each_path(rm, r0, times, cfg.n_paths, cfg.seed, cfg.antithetic, 0,
                  [&](std::size_t i, std::span<const double> x) {
                      const double RT = std::exp(x.back());
                      put[i] = disc * std::max(M - RT, 0.0);
                      call[i] = disc * std::max(RT - M, 0.0);
                      terminal[i] = RT;
                  });
    return {summarize(put, cfg.antithetic), summarize(call, cfg.antithetic),
            summarize(terminal, cfg.antithetic)};
}

MCEstimate lsmc_american(const ReducedModel& rm, double r0, double t0, const MCConfig& cfg) {
    validate(cfg);
    if (!(r0 > 0.0)) fail(ErrorCode::InvalidParameter, fmt::format("r0 = {}", r0));
    const auto times = uniform_times(t0, rm.T, cfg.n_steps);
    const std::size_t n = cfg.n_steps;
    const std::size_t nt = n + 1;
    const int deg = cfg.basis_degree;
    const std::size_t nb = static_cast<std::size_t>(deg) + 1;
    const double step_disc = std::exp(-rm.q1 * (times[1] - times[0]));
    std::vector<double> strikes(nt);
    for (std::size_t j = 0; j < nt; ++j) strikes[j] = rm.strike_at(times[j]);

    // Training set: regress discounted cash flows on in-the-money paths.
    std::vector<double> ratios(cfg.n_paths * nt);
    for_each_path(rm, r0, times, cfg.n_paths, cfg.seed, cfg.antithetic, 0,
                  [&](std::size_t i, std::span<const double> x) {
                      for (std::size_t j = 0; j < nt; ++j) ratios[i * nt + j] = std::exp(x[j]);
                  });
    std::vector<double> cash(cfg.n_paths);
    for (std::size_t i = 0; i < cfg.n_paths; ++i)
        cash[i] = std::max(strikes[n] - ratios[i * nt + n], 0.0);

    std::vector<Eigen::VectorXd> coeffs(nt);
    for (std::size_t j = n - 1; j >= 1; --j) {
        for (auto& c : cash) c *= step_disc;
        Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb),
                                                    static_cast<Eigen::Index>(nb));
        Eigen::VectorXd xty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb));
        std::size_t itm = 0;
        for (std::size_t i = 0; i < cfg.n_paths; ++i) {
            const double R = ratios[i * nt + j];
            if (strikes[j] - R <= 0.0) continue;
            ++itm;
            const auto phi = basis(R / strikes[j], deg);
            for (std::size_t a = 0; a < nb; ++a) {
                xty(static_cast<Eigen::Index>(a)) += phi[a] * cash[i];
                for (std::size_t b = 0; b < nb; ++b)
                    xtx(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
                        phi[a] * phi[b];
            }
        }
        if (itm == 0) continue; // nothing to exercise at this date
        xtx.diagonal().array() += 1e-10;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
        Eigen::VectorXd beta = ldlt.solve(xty);
        if (ldlt.info() != Eigen::Success || !beta.allFinite())
            fail(ErrorCode::SingularRegression,
                 fmt::format("regression failed at step {} (t = {}, {} in-the-money paths)", j,
                             times[j], itm));
        for (std::size_t i = 0; i < cfg.n_paths; ++i) {
            const double R = ratios[i * nt + j];
            const double intrinsic = strikes[j] - R;
            if (intrinsic <= 0.0) continue;
            const auto phi = basis(R / strikes[j], deg);
            double fitted = 0.0;
            for (std::size_t a = 0; a < nb; ++a) fitted += beta(static_cast<Eigen::Index>(a)) * phi[a];
            if (intrinsic >= fitted) cash[i] = intrinsic;
        }
        coeffs[j] = std::move(beta);
    }
    ratios.clear();
    ratios.shrink_to_fit();

    // Evaluation set: apply the frozen policy on independent streams.
    std::vector<double> value(cfg.n_paths);
    for_each_path(rm, r0, times, cfg.n_paths, cfg.seed, cfg.antithetic, kEvaluationStreamOffset,
                  [&](std::size_t i, std::span<const double> x) {
                      for (std::size_t j = 1; j < n; ++j) {
                          if (coeffs[j].size() == 0) continue;
                          const double R = std::exp(x[j]);
                          const double intrinsic = strikes[j] - R;
                          if (intrinsic <= 0.0) continue;
                          const auto phi = basis(R / strikes[j], deg);
                          double fitted = 0.0;
                          for (std::size_t a = 0; a < nb; ++a)
                              fitted += coeffs[j](static_cast<Eigen::Index>(a)) * phi[a];
                          if (intrinsic >= fitted) {
                              value[i] = std::exp(-rm.q1 * (times[j] - t0)) * intrinsic;
                              return;
                          }
                      }
                      value[i] = std::exp(-rm.q1 * (rm.T - t0)) *
                                 std::max(strikes[n] - std::exp(x[n]), 0.0);
                  });
    MCEstimate est = summarize(value, cfg.antithetic);
    const double intrinsic0 = strikes[0] - r0;
    if (intrinsic0 > 0.0 && intrinsic0 >= est.estimate) return {intrinsic0, 0.0};
    return est;
}

namespace {

/// G(y) = u^A(s, y) - (M_s - y) for y above the boundary, tabulated on a
/// log-spaced grid and interpolated linearly in log y.
class CrossingTable {
public:
    CrossingTable() = default;
    CrossingTable(const ReducedModel& rm, double s, const ApproxSolution& sol, double zspan,
                  const QuadratureSpec& spec, int n = 256)
        : rm_(&rm), s_(s), sol_(sol), spec_(spec), lo_(std::log(sol.b)),
          hi_(std::log(sol.b) + zspan) {
        values_.resize(static_cast<std::size_t>(n) + 1);
        step_ = (hi_ - lo_) / n;
        values_[0] = 0.0; // value matching at the boundary
        for (int k = 1; k <= n; ++k) values_[k] = direct(std::exp(lo_ + k * step_));
    }

    double operator()(double y) const {
        const double x = std::log(y);
        if (x >= hi_) return direct(y);
        const double pos = (x - lo_) / step_;
        const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
        const double w = pos - static_cast<double>(k);
        return (1.0 - w) * values_[k] + w * values_[k + 1];
    }

private:
    double direct(double y) const {
        return approx_american_ratio(y, s_, *rm_, sol_, spec_) - (rm_->strike_at(s_) - y);
    }

    const ReducedModel* rm_ = nullptr;
    double s_ = 0.0;
    ApproxSolution sol_;
    QuadratureSpec spec_;
    double lo_ = 0.0, hi_ = 0.0, step_ = 1.0;
    std::vector<double> values_;
};

struct SliceBoundary {
    double b = 0.0;
    double A = 0.0;
    double alpha = 0.0;
};

SliceBoundary interpolate_boundary(const ExerciseBoundary& eb, double s) {
    const auto& g = eb.grid;
    if (s <= g.front().t) return {g.front().b, g.front().A, g.front().alpha};
    if (s >= g.back().t) return {g.back().b, g.back().A, g.back().alpha};
    const auto it = std::upper_bound(g.begin(), g.end(), s,
                                     [](double v, const BoundaryPoint& p) { return v < p.t; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (s - lo.t) / (hi.t - lo.t);
    return {(1 - w) * lo.b + w * hi.b, (1 - w) * lo.A + w * hi.A,
            (1 - w) * lo.alpha + w * hi.alpha};
}

} // namespace

PremiumTerms estimate_premium_terms(const PathBatch& paths, const ExerciseBoundary& boundary,
                                    const ReducedModel& rm, const QuadratureSpec& spec) {
    if (paths.n_paths == 0 || paths.n_times() < 2)
        fail(ErrorCode::InvalidParameter, "empty path batch");
    if (boundary.grid.empty()) fail(ErrorCode::BoundaryGap, "boundary has no nodes");
    const double t0 = paths.times.front();
    const double T = paths.times.back();
    for (const auto& p : boundary.grid)
        if (p.t >= t0 - 1e-12 && p.t < T && !p.converged)
            fail(ErrorCode::BoundaryGap, fmt::format("boundary unsolved at t = {}", p.t));

    const std::size_t nt = paths.n_times();
    const bool jumps = rm.has_jumps();

    // Largest upward log-jump that can matter for a crossing.
    double zspan = 0.0;
    const numerics::QuadratureRule gh = numerics::gauss_hermite(64);
    if (const auto* a = std::get_if<TiltedAtoms>(&rm.jumps)) {
        for (const auto& p : a->points) zspan = std::max(zspan, p.z);
    } else if (const auto* g = std::get_if<TiltedGaussian>(&rm.jumps)) {
        zspan = std::max(0.0, g->mean + std::sqrt(2.0 * g->var) * gh.nodes.back());
    }

    struct Slice {
        double s, b, M, disc, weight;
        bool terminal;
        CrossingTable table;
    };
    std::vector<Slice> slices(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        auto& sl = slices[j];
        sl.s = paths.times[j];
        const auto sb = interpolate_boundary(boundary, sl.s);
        sl.b = sb.b;
        sl.M = rm.strike_at(sl.s);
        sl.disc = std::exp(-rm.q1 * (sl.s - t0));
        const double left = j > 0 ? paths.times[j] - paths.times[j - 1] : 0.0;
        const double right = j + 1 < nt ? paths.times[j + 1] - paths.times[j] : 0.0;
        sl.weight = 0.5 * (left + right);
        sl.terminal = (j + 1 == nt);
        if (jumps && zspan > 0.0 && sl.b > 0.0 && !sl.terminal) {
            ApproxSolution sol;
            sol.t = sl.s;
            sol.b = sb.b;
            sol.A = sb.A;
            sol.alpha_root.alpha = sb.alpha;
            sl.table = CrossingTable(rm, sl.s, sol, zspan, spec);
        }
    }

    auto crossing_cost = [&](const Slice& sl, double R) {
        auto G = [&](double y) {
            if (sl.terminal) return std::max(y - rm.strike_at(rm.T), 0.0);
            return sl.table(y);
        };
        if (const auto* a = std::get_if<TiltedAtoms>(&rm.jumps)) {
            double c = 0.0;
            for (const auto& p : a->points) {
                const double y = R * std::exp(p.z);
                if (y > sl.b) c += p.lambda * G(y);
            }
            return c;
        }
        if (const auto* g = std::get_if<TiltedGaussian>(&rm.jumps)) {
            const double scale = std::sqrt(2.0 * g->var);
            double c = 0.0;
            for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
                const double y = R * std::exp(g->mean + scale * gh.nodes[k]);
                if (y > sl.b) c += gh.weights[k] * G(y);
            }
            return g->lambda * c / std::sqrt(std::numbers::pi);
        }
        return 0.0;
    };

    std::vector<double> carry(paths.n_paths), cost(paths.n_paths), combined(paths.n_paths);
    parallel_for(paths.n_paths, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const auto x = paths.path(i);
            double a = 0.0, c = 0.0;
            for (std::size_t j = 0; j < nt; ++j) {
                const auto& sl = slices[j];
                const double R = std::exp(x[j]);
                if (!(R <= sl.b)) continue;
                a += sl.weight * sl.disc * (rm.q2 * sl.M - rm.q1 * R);
                if (jumps && zspan > 0.0) c += sl.weight * sl.disc * crossing_cost(sl, R);
            }
            carry[i] = a;
            cost[i] = c;
            combined[i] = a - c;
        }
    });

    PremiumTerms out;
    out.dividend = summarize(carry, paths.antithetic);
    out.jump = summarize(cost, paths.antithetic);
    out.combined = summarize(combined, paths.antithetic);
    return out;
}

void write_paths_csv(const PathBatch& paths, const std::string& file, std::size_t max_rows) {
    const std::size_t rows = paths.n_paths * paths.n_times();
    if (rows > max_rows)
        fail(ErrorCode::InvalidParameter,
             fmt::format("path dump of {} rows exceeds the {} row limit", rows, max_rows));
    auto out = fmt::output_file(file);
    out.print("path_id,t,R\n");
    for (std::size_t i = 0; i < paths.n_paths; ++i)
        for (std::size_t j = 0; j < paths.n_times(); ++j)
            out.print("{},{:.17g},{:.17g}\n", i, paths.times[j], paths.ratio(i, j));
}

} // namespace exchopt
