#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exchopt/american.hpp"
#include "exchopt/model.hpp"

namespace exchopt {

struct MCConfig {
    std::size_t n_paths = 100000;
    std::size_t n_steps = 64; ///< steps over [t0, T]
    std::uint64_t seed = 20240917;
    bool antithetic = true;
    int basis_degree = 4;
};

/// Throws InvalidParameter unless n_steps >= 16 and, for pricing, n_paths >= 1000.
void validate(const MCConfig& cfg, bool pricing = true);

struct JumpMark {
    double time = 0.0;
    double z = 0.0;
};

enum class Measure { Q };

/// Simulated log-ratio paths under the asset-2 numeraire measure.
struct PathBatch {
    std::vector<double> times;     ///< n_times, times[0] = t0
    std::vector<double> log_ratio; ///< row-major n_paths x n_times
    std::vector<std::vector<JumpMark>> jump_marks;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    bool antithetic = false;
    Measure measure = Measure::Q;

    std::size_t n_times() const { return times.size(); }
    std::span<const double> path(std::size_t i) const {
        return {log_ratio.data() + i * n_times(), n_times()};
    }
    double ratio(std::size_t i, std::size_t j) const;
};

/// Exact per-step sampling: Gaussian increment plus compound Poisson jumps.
/// Paths 2j and 2j+1 share stream j when antithetic (Gaussian draws negated
/// on the odd path); otherwise path i owns stream i.
PathBatch simulate_ratio_paths(const ReducedModel& rm, double r0, double t0, double T,
                               const MCConfig& cfg);

struct MCEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

struct EuropeanMC {
    MCEstimate put;  ///< e^{-q1 tau} (M - R_T)^+
    MCEstimate call; ///< e^{-q1 tau} (R_T - M)^+
    MCEstimate terminal_ratio; ///< R_T itself (martingale check)
};

EuropeanMC mc_european(const ReducedModel& rm, double r0, double t0, const MCConfig& cfg);

/// Least-squares Monte Carlo for the put-type American value. The exercise
/// policy is regressed on one path set and evaluated on an independent one.
MCEstimate lsmc_american(const ReducedModel& rm, double r0, double t0, const MCConfig& cfg);

struct PremiumTerms {
    MCEstimate dividend; ///< normalized carry integral over the stopping region
    MCEstimate jump;     ///< normalized crossing-cost integral
    MCEstimate combined; ///< dividend - jump, per path
};

/// Trapezoidal estimators of the two early-exercise premium integrals along
/// `paths`, with the boundary interpolated linearly between its nodes.
PremiumTerms estimate_premium_terms(const PathBatch& paths, const ExerciseBoundary& boundary,
                                    const ReducedModel& rm, const QuadratureSpec& spec = {});

/// Writes `path_id,t,R`. Throws InvalidParameter above `max_rows` rows.
void write_paths_csv(const PathBatch& paths, const std::string& file,
                     std::size_t max_rows = 2'000'000);

/// Mean and standard error; with `paired` the samples are averaged two by two
/// first (antithetic pairs are dependent).
MCEstimate summarize(std::span<const double> samples, bool paired);

} // namespace exchopt
