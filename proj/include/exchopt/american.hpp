#pragma once

#include <optional>
#include <span>
#include <vector>

#include "exchopt/charfn.hpp"
#include "exchopt/model.hpp"

namespace exchopt {

struct MCConfig;

/// Unique negative root of the stationary premium equation
///   f(a) = (s^2/2) a^2 - (s^2/2 + kappa) a + int (e^{a z} - 1) nu~(dz) - q1 - h'/h
/// with h(tau) = 1 - e^{-tau}.
struct AlphaRoot {
    double alpha = 0.0;
    double residual = 0.0;
    double h = 0.0;
    double hprime_over_h = 0.0;
};

/// f(alpha) as written in log coordinates (exponential ansatz e^{alpha x}).
double alpha_equation(const ReducedModel& rm, double tau, double alpha);

/// f(alpha) obtained by applying the ratio-space generator to the power
/// function r^alpha at `probe` and dividing by probe^alpha.
double alpha_equation_ratio(const ReducedModel& rm, double tau, double alpha, double probe = 1.0);

AlphaRoot solve_alpha(const ReducedModel& rm, double tau);

/// Critical ratio and premium coefficient at time t.
struct ApproxSolution {
    double t = 0.0;
    double b = 0.0;
    double A = 0.0;
    AlphaRoot alpha_root;
    double value_match_residual = 0.0;
    double smooth_paste_residual = 0.0;
    double european_at_b = 0.0; ///< u^E(t, b)
    double delta_at_b = 0.0;    ///< d/dr u^E(t, b)
};

/// Solves value matching and smooth pasting of u^E + h A r^alpha against the
/// exercise value K e^{(q1-q2)t} - r. Throws NoBoundaryRoot when q1 <= 0 or
/// when the scalar residual has no sign change on (1e-10 M, M).
ApproxSolution solve_boundary_at(double t, const ReducedModel& rm, const QuadratureSpec& spec = {});

/// Continuation-or-exercise value u^A(t, r) of the approximation given the
/// solution at t. At t == T this is the payoff.
double approx_american_ratio(double r, double t, const ReducedModel& rm, const ApproxSolution& sol,
                             const QuadratureSpec& spec = {});

/// Limit of the exercise boundary at maturity: the S0 in (0, M] with
/// int (M - S0 e^z)^+ nu~(dz) = q1 (M - S0), M = K e^{(q1-q2)T}.
double terminal_boundary(const ReducedModel& rm);

/// int (M - S e^z)^+ nu~(dz).
double jump_put_integral(const TiltedJumpLaw& law, double M, double S);

struct BoundaryPoint {
    double t = 0.0;
    double b = 0.0; ///< NaN when not converged
    double A = 0.0;
    double alpha = 0.0;
    bool converged = false;
};

struct ExerciseBoundary {
    std::vector<BoundaryPoint> grid;
    std::optional<double> S0;          ///< empty when the terminal equation has no root
    double max_adjacent_jump = 0.0;    ///< over consecutive converged points
    bool non_decreasing = true;        ///< violations beyond 1e-8 clear this flag
    int monotonicity_violations = 0;
    int gaps = 0;
};

/// Boundary on a uniform grid over [0, T - delta], delta = T / (10 n_points).
ExerciseBoundary build_boundary_curve(const ReducedModel& rm, int n_points,
                                      const QuadratureSpec& spec = {});

/// Boundary at caller-chosen times (each < T).
ExerciseBoundary build_boundary_at(const ReducedModel& rm, std::span<const double> times,
                                   const QuadratureSpec& spec = {});

struct AmericanQuote {
    double price = 0.0;    ///< currency
    double european = 0.0; ///< currency, payoff (K S2 - S1)^+
    double ratio = 0.0;    ///< r = e^{(q1-q2)t} S1/S2
    double premium_normalized = 0.0; ///< h A r^alpha, zero in the stopping region
    bool exercise_never_optimal = false;
    bool in_stopping_region = false;
    std::optional<ApproxSolution> boundary;
};

/// Quadratic-approximation price of the American option paying (K S2 - S1)^+.
AmericanQuote american_price(double S1, double S2, double t, const ReducedModel& rm,
                             const QuadratureSpec& spec = {});

struct PremiumBreakdown {
    double european = 0.0;
    double dividend_term = 0.0;
    double dividend_stderr = 0.0;
    double jump_term = 0.0; ///< crossing cost, subtracted in the total
    double jump_stderr = 0.0;
    double total_american = 0.0;
    double total_stderr = 0.0;
    bool exercise_never_optimal = false;
};

/// Early-exercise premium decomposition estimated on simulated ratio paths.
PremiumBreakdown premium_decomposition(double S1, double S2, double t, const ReducedModel& rm,
                                       const MCConfig& cfg, const QuadratureSpec& spec = {});

} // namespace exchopt
