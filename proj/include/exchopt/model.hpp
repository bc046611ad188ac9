#pragma once

#include <array>
#include <variant>
#include <vector>

namespace exchopt {

// ---------------------------------------------------------------------------
// Bivariate jump specification (finite activity only)
// ---------------------------------------------------------------------------

struct NoJumps {};

/// Point mass of intensity `lambda` at the log-jump pair (y1, y2).
struct JumpAtom {
    double y1 = 0.0;
    double y2 = 0.0;
    double lambda = 0.0;
};

struct AtomJumps {
    std::vector<JumpAtom> points;
};

/// Compound Poisson with bivariate normal marks N(mu, cov) and rate `lambda`.
struct GaussianJumps {
    double lambda = 0.0;
    std::array<double, 2> mu{0.0, 0.0};
    std::array<std::array<double, 2>, 2> cov{{{0.0, 0.0}, {0.0, 0.0}}};
};

using JumpSpec = std::variant<NoJumps, AtomJumps, GaussianJumps>;

/// Two dividend-paying assets under the pricing measure, with correlated
/// Brownian drivers and a common bivariate jump measure.
struct TwoAssetModel {
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double rho = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
    double r = 0.0;
    double K = 1.0; ///< exchange ratio
    double T = 1.0; ///< horizon in years
    JumpSpec jumps = NoJumps{};
};

// ---------------------------------------------------------------------------
// One-dimensional law of z = y1 - y2 under the tilted measure e^{y2} nu
// ---------------------------------------------------------------------------

struct TiltedAtom {
    double z = 0.0;
    double lambda = 0.0; ///< tilted intensity
};

struct TiltedAtoms {
    std::vector<TiltedAtom> points;
};

/// Gaussian z-marks with tilted rate `lambda`, mean `mean` and variance `var`.
struct TiltedGaussian {
    double lambda = 0.0;
    double mean = 0.0;
    double var = 0.0;
};

using TiltedJumpLaw = std::variant<NoJumps, TiltedAtoms, TiltedGaussian>;

/// Total tilted intensity (0 for no jumps).
double total_intensity(const TiltedJumpLaw& law);

/// int (e^{c z} - 1) nu~(dz) for real c.
double jump_mgf_minus_one(const TiltedJumpLaw& law, double c);

/// int z^n e^{c z} nu~(dz) for n in {1, 2}.
double jump_moment(const TiltedJumpLaw& law, int n, double c);

/// Ratio process R = e^{q1 t} S1 / (e^{q2 t} S2) under the asset-2 numeraire.
/// Its logarithm is a Levy process with Gaussian part `sigma` and jump law
/// `jumps`; `kappa` is the compensator int (e^z - 1) nu~(dz).
struct ReducedModel {
    double sigma = 0.0;
    TiltedJumpLaw jumps = NoJumps{};
    double kappa = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
    double K = 1.0;
    double T = 1.0;

    /// K e^{(q1 - q2) t}: the exercise level of the put-type problem at time t.
    double strike_at(double t) const;

    bool has_jumps() const { return !std::holds_alternative<NoJumps>(jumps); }
};

/// sigma1^2 + sigma2^2 - 2 rho sigma1 sigma2.
double effective_variance(const TwoAssetModel& m);

/// Checks every model invariant and throws PricingError on the first violation.
const TwoAssetModel& validate_model(const TwoAssetModel& m);

/// Change of numeraire to the one-dimensional ratio process. Validates first.
ReducedModel reduce(const TwoAssetModel& m);

/// Builds a reduced model directly from a tilted law; the compensator is
/// derived from the law. Used where the tilted parameters are the natural
/// inputs (tests, one-dimensional experiments).
ReducedModel make_reduced(double sigma, TiltedJumpLaw jumps, double q1, double q2, double K,
                          double T);

} // namespace exchopt
