#include "exchopt/model.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include <fmt/format.h>

#include "exchopt/errors.hpp"

namespace exchopt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_finite(double v, const char* name) {
    if (!std::isfinite(v))
        fail(ErrorCode::InvalidParameter, fmt::format("{} is not finite", name));
}

void validate_jumps(const JumpSpec& jumps) {
    std::visit(overloaded{
                   [](const NoJumps&) {},
                   [](const AtomJumps& a) {
                       for (std::size_t k = 0; k < a.points.size(); ++k) {
                           const auto& p = a.points[k];
                           require_finite(p.y1, "atom y1");
                           require_finite(p.y2, "atom y2");
                           require_finite(p.lambda, "atom lambda");
                           if (!(p.lambda > 0.0))
                               fail(ErrorCode::NegativeIntensity,
                                    fmt::format("atom {} has intensity {}", k, p.lambda));
                       }
                   },
                   [](const GaussianJumps& g) {
                       require_finite(g.lambda, "gaussian lambda");
                       if (!(g.lambda > 0.0))
                           fail(ErrorCode::NegativeIntensity,
                                fmt::format("gaussian intensity {}", g.lambda));
                       for (double v : g.mu) require_finite(v, "gaussian mu");
                       for (const auto& row : g.cov)
                           for (double v : row) require_finite(v, "gaussian cov");
                       const auto& c = g.cov;
                       if (c[0][1] != c[1][0])
                           fail(ErrorCode::InvalidParameter, "gaussian covariance is not symmetric");
                       // 2x2 symmetric PSD <=> non-negative diagonal and determinant
                       const double det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
                       if (c[0][0] < 0.0 || c[1][1] < 0.0 || det < -1e-15)
                           fail(ErrorCode::InvalidParameter,
                                "gaussian covariance is not positive semidefinite");
                   },
               },
               jumps);
}

TiltedJumpLaw tilt(const JumpSpec& jumps) {
    return std::visit(overloaded{
                          [](const NoJumps&) -> TiltedJumpLaw { return NoJumps{}; },
                          [](const AtomJumps& a) -> TiltedJumpLaw {
                              if (a.points.empty()) return NoJumps{};
                              TiltedAtoms out;
                              out.points.reserve(a.points.size());
                              for (const auto& p : a.points)
                                  out.points.push_back({p.y1 - p.y2, p.lambda * std::exp(p.y2)});
                              return out;
                          },
                          [](const GaussianJumps& g) -> TiltedJumpLaw {
                              const auto& c = g.cov;
                              TiltedGaussian out;
                              out.lambda = g.lambda * std::exp(g.mu[1] + 0.5 * c[1][1]);
                              out.mean = (g.mu[0] + c[0][1]) - (g.mu[1] + c[1][1]);
                              out.var = c[0][0] - 2.0 * c[0][1] + c[1][1];
                              if (out.var < 0.0) out.var = 0.0; // rounding on singular covariances
                              return out;
                          },
                      },
                      jumps);
}

} // namespace

double total_intensity(const TiltedJumpLaw& law) {
    return std::visit(overloaded{
                          [](const NoJumps&) { return 0.0; },
                          [](const TiltedAtoms& a) {
                              double s = 0.0;
                              for (const auto& p : a.points) s += p.lambda;
                              return s;
                          },
                          [](const TiltedGaussian& g) { return g.lambda; },
                      },
                      law);
}

double jump_mgf_minus_one(const TiltedJumpLaw& law, double c) {
    return std::visit(overloaded{
                          [](const NoJumps&) { return 0.0; },
                          [c](const TiltedAtoms& a) {
                              double s = 0.0;
                              for (const auto& p : a.points) s += p.lambda * std::expm1(c * p.z);
                              return s;
                          },
                          [c](const TiltedGaussian& g) {
                              return g.lambda * std::expm1(c * g.mean + 0.5 * c * c * g.var);
                          },
                      },
                      law);
}

double jump_moment(const TiltedJumpLaw& law, int n, double c) {
    return std::visit(overloaded{
                          [](const NoJumps&) { return 0.0; },
                          [n, c](const TiltedAtoms& a) {
                              double s = 0.0;
                              for (const auto& p : a.points)
                                  s += p.lambda * std::pow(p.z, n) * std::exp(c * p.z);
                              return s;
                          },
                          [n, c](const TiltedGaussian& g) {
                              // Under the exponentially tilted normal, z ~ N(m + c v, v).
                              const double mgf = std::exp(c * g.mean + 0.5 * c * c * g.var);
                              const double m = g.mean + c * g.var;
                              const double second = g.var + m * m;
                              return g.lambda * mgf * (n == 1 ? m : second);
                          },
                      },
                      law);
}

double ReducedModel::strike_at(double t) const { return K * std::exp((q1 - q2) * t); }

double effective_variance(const TwoAssetModel& m) {
    return m.sigma1 * m.sigma1 + m.sigma2 * m.sigma2 - 2.0 * m.rho * m.sigma1 * m.sigma2;
}

const TwoAssetModel& validate_model(const TwoAssetModel& m) {
    const std::array<std::pair<double, const char*>, 8> scalars{{{m.sigma1, "sigma1"},
                                                                 {m.sigma2, "sigma2"},
                                                                 {m.rho, "rho"},
                                                                 {m.q1, "q1"},
                                                                 {m.q2, "q2"},
                                                                 {m.r, "r"},
                                                                 {m.K, "K"},
                                                                 {m.T, "T"}}};
    for (const auto& [v, name] : scalars) require_finite(v, name);
    if (m.sigma1 < 0.0 || m.sigma2 < 0.0)
        fail(ErrorCode::InvalidParameter, "volatilities must be non-negative");
    if (std::abs(m.rho) > 1.0)
        fail(ErrorCode::InvalidCorrelation, fmt::format("rho = {} outside [-1, 1]", m.rho));
    if (!(m.K > 0.0)) fail(ErrorCode::NonPositiveStrike, fmt::format("K = {}", m.K));
    if (!(m.T > 0.0)) fail(ErrorCode::InvalidParameter, fmt::format("T = {}", m.T));
    if (m.q1 < 0.0) fail(ErrorCode::InvalidParameter, fmt::format("q1 = {} is negative", m.q1));
    if (!(effective_variance(m) > 0.0))
        fail(ErrorCode::DegenerateDiffusion,
             fmt::format("effective variance {} is not positive", effective_variance(m)));
    validate_jumps(m.jumps);
    return m;
}

ReducedModel reduce(const TwoAssetModel& m) {
    validate_model(m);
    return make_reduced(std::sqrt(effective_variance(m)), tilt(m.jumps), m.q1, m.q2, m.K, m.T);
}

ReducedModel make_reduced(double sigma, TiltedJumpLaw jumps, double q1, double q2, double K,
                          double T) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        fail(ErrorCode::DegenerateDiffusion, fmt::format("sigma = {}", sigma));
    if (!(T > 0.0)) fail(ErrorCode::InvalidParameter, fmt::format("T = {}", T));
    if (K < 0.0) fail(ErrorCode::NonPositiveStrike, fmt::format("K = {}", K));
    if (const auto* a = std::get_if<TiltedAtoms>(&jumps)) {
        for (const auto& p : a->points)
            if (!(p.lambda > 0.0))
                fail(ErrorCode::NegativeIntensity, fmt::format("tilted intensity {}", p.lambda));
    } else if (const auto* g = std::get_if<TiltedGaussian>(&jumps)) {
        if (!(g->lambda > 0.0))
            fail(ErrorCode::NegativeIntensity, fmt::format("tilted intensity {}", g->lambda));
        if (g->var < 0.0) fail(ErrorCode::InvalidParameter, "negative z-variance");
    }
    ReducedModel rm;
    rm.sigma = sigma;
    rm.jumps = std::move(jumps);
    rm.kappa = jump_mgf_minus_one(rm.jumps, 1.0);
    rm.q1 = q1;
    rm.q2 = q2;
    rm.K = K;
    rm.T = T;
    return rm;
}

} // namespace exchopt
