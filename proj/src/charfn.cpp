#include "exchopt/charfn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "exchopt/errors.hpp"
#include "exchopt/numerics.hpp"

namespace exchopt {

namespace {

constexpr cplx I{0.0, 1.0};

cplx jump_exponent(const TiltedJumpLaw& law, cplx u) {
    if (const auto* a = std::get_if<TiltedAtoms>(&law)) {
        cplx s = 0.0;
        for (const auto& p : a->points) s += p.lambda * (std::exp(I * u * p.z) - 1.0);
        return s;
    }
    if (const auto* g = std::get_if<TiltedGaussian>(&law))
        return g->lambda * (std::exp(I * u * g->mean - 0.5 * g->var * u * u) - 1.0);
    return 0.0;
}

// Chernoff bound on P(Y > k) (upper = true) or P(Y <= k) under the measure
// with density e^{shift*Y}, where log E[e^{cY}] = tau * Lambda(c).
double chernoff_tail(const CharExponent& ce, double tau, double k, double shift, bool upper) {
    double best = 1.0;
    const double base = ce.cumulant(shift);
    for (double c = 0.25; c <= 256.0; c *= 2.0) {
        const double signed_c = upper ? c : -c;
        const double expo = tau * (ce.cumulant(shift + signed_c) - base) - signed_c * k;
        if (std::isfinite(expo)) best = std::min(best, std::exp(std::min(expo, 0.0)));
    }
    return best;
}

} // namespace

CharExponent::CharExponent(const ReducedModel& rm)
    : drift(-(rm.kappa + 0.5 * rm.sigma * rm.sigma)), sigma(rm.sigma), jumps(rm.jumps) {}

cplx CharExponent::operator()(cplx u) const {
    return drift * I * u - 0.5 * sigma * sigma * u * u + jump_exponent(jumps, u);
}

double CharExponent::cumulant(double c) const {
    return drift * c + 0.5 * sigma * sigma * c * c + jump_mgf_minus_one(jumps, c);
}

double CharExponent::mean(bool share_measure) const {
    if (share_measure) return drift + sigma * sigma + jump_moment(jumps, 1, 1.0);
    return drift + jump_moment(jumps, 1, 0.0);
}

void validate(const QuadratureSpec& spec) {
    if (!(spec.abs_tol > 0.0))
        fail(ErrorCode::InvalidParameter, fmt::format("abs_tol = {}", spec.abs_tol));
    if (spec.max_panels < 8)
        fail(ErrorCode::InvalidParameter, fmt::format("max_panels = {}", spec.max_panels));
    if (!(spec.truncation_margin > 0.0))
        fail(ErrorCode::InvalidParameter,
             fmt::format("truncation_margin = {}", spec.truncation_margin));
}

cplx char_fn(cplx u, double tau, const ReducedModel& rm) {
    if (tau < 0.0) fail(ErrorCode::InvalidParameter, fmt::format("tau = {}", tau));
    const cplx e = tau * CharExponent(rm)(u);
    if (e.real() > 700.0)
        fail(ErrorCode::FlaggedOverflow, fmt::format("Re(tau psi) = {} at u = ({}, {})", e.real(),
                                                     u.real(), u.imag()));
    return std::exp(e);
}

EuropeanQuote european_call_ratio(double r, double t, const ReducedModel& rm,
                                  const QuadratureSpec& spec) {
    if (!(r > 0.0)) fail(ErrorCode::InvalidParameter, fmt::format("ratio r = {}", r));
    validate(spec);
    const double tau = rm.T - t;
    if (tau < 0.0) fail(ErrorCode::InvalidParameter, fmt::format("t = {} beyond T", t));
    const double M = rm.strike_at(rm.T);
    const double disc = std::exp(-rm.q1 * tau);

    EuropeanQuote q;
    auto finish = [&] {
        q.pi1 = std::clamp(q.pi1, 0.0, 1.0);
        q.pi2 = std::clamp(q.pi2, 0.0, 1.0);
        const double raw = disc * (r * q.pi1 - M * q.pi2);
        q.price = std::clamp(raw, std::max(0.0, disc * (r - M)), disc * r);
        q.delta_r = disc * q.pi1;
        return q;
    };

    if (M == 0.0) {
        q.pi1 = q.pi2 = 1.0;
        return finish();
    }
    if (tau == 0.0) {
        q.pi1 = q.pi2 = (r > M) ? 1.0 : 0.0;
        return finish();
    }

    const double k = std::log(M / r);
    const CharExponent psi(rm);

    // Tails far beyond the law's reach: the Chernoff bound already certifies
    // the probabilities to well below the tolerance.
    const double negligible = 1e-3 * spec.abs_tol;
    const bool up1 = chernoff_tail(psi, tau, k, 1.0, true) < negligible;
    const bool up2 = chernoff_tail(psi, tau, k, 0.0, true) < negligible;
    const bool lo1 = chernoff_tail(psi, tau, k, 1.0, false) < negligible;
    const bool lo2 = chernoff_tail(psi, tau, k, 0.0, false) < negligible;
    if (up1 && up2) {
        q.pi1 = q.pi2 = 0.0;
        return finish();
    }
    if (lo1 && lo2) {
        q.pi1 = q.pi2 = 1.0;
        return finish();
    }

    const double s2 = rm.sigma * rm.sigma;
    const double U = std::sqrt(2.0 * spec.truncation_margin / (s2 * tau));
    // int_U^inf e^{-a u^2}/u du <= e^{-a U^2} / (2 a U^2), a U^2 = margin, for each Pi
    const double tail =
        2.0 * std::exp(-spec.truncation_margin) / (std::numbers::pi * 2.0 * spec.truncation_margin);

    const double mean1 = tau * psi.mean(true) - k;
    const double mean2 = tau * psi.mean(false) - k;
    const cplx psi_minus_i = psi(cplx(0.0, -1.0));

    auto integrand = [&](double u) -> std::array<double, 2> {
        if (u < 1e-6) {
            // Im[e^{-iuk} phi(u)] / u -> E[Y] - k as u -> 0
            return {mean1, mean2};
        }
        const cplx shift = std::exp(-I * u * k);
        const cplx f1 = std::exp(tau * (psi(cplx(u, -1.0)) - psi_minus_i));
        const cplx f2 = std::exp(tau * psi(cplx(u, 0.0)));
        return {(shift * f1).imag() / u, (shift * f2).imag() / u};
    };

    const auto res = numerics::integrate_adaptive<2>(integrand, 0.0, U,
                                                     spec.abs_tol * std::numbers::pi,
                                                     spec.max_panels, 8, tail * std::numbers::pi);
    q.truncation = U;
    q.panels = res.panels;
    q.quad_error = res.error / std::numbers::pi;
    if (!res.converged)
        fail(ErrorCode::QuadratureNotConverged,
             fmt::format("error {} > {} after {} panels (r = {}, tau = {})", q.quad_error,
                         spec.abs_tol, res.panels, r, tau));
    q.pi1 = 0.5 + res.value[0] / std::numbers::pi;
    q.pi2 = 0.5 + res.value[1] / std::numbers::pi;
    return finish();
}

EuropeanQuote european_put_ratio(double r, double t, const ReducedModel& rm,
                                 const QuadratureSpec& spec) {
    EuropeanQuote q = european_call_ratio(r, t, rm, spec);
    const double tau = rm.T - t;
    const double disc = std::exp(-rm.q1 * tau);
    const double M = rm.strike_at(rm.T);
    q.price = q.price - disc * (r - M);
    q.price = std::clamp(q.price, std::max(0.0, disc * (M - r)), disc * M);
    q.delta_r -= disc;
    return q;
}

double european_delta_r(double r, double t, const ReducedModel& rm, const QuadratureSpec& spec) {
    return european_put_ratio(r, t, rm, spec).delta_r;
}

double ratio_from_spots(double S1, double S2, double t, const ReducedModel& rm) {
    if (!(S2 > 0.0)) fail(ErrorCode::InvalidParameter, fmt::format("S2 = {}", S2));
    if (S1 < 0.0) fail(ErrorCode::InvalidParameter, fmt::format("S1 = {}", S1));
    return std::exp((rm.q1 - rm.q2) * t) * S1 / S2;
}

double numeraire_scale(double S2, double t, const ReducedModel& rm) {
    return S2 * std::exp((rm.q2 - rm.q1) * t);
}

double european_price_physical(double S1, double S2, double t, const ReducedModel& rm,
                               const QuadratureSpec& spec) {
    const double r = ratio_from_spots(S1, S2, t, rm);
    if (r == 0.0) return 0.0;
    return numeraire_scale(S2, t, rm) * european_call_ratio(r, t, rm, spec).price;
}

double european_put_physical(double S1, double S2, double t, const ReducedModel& rm,
                             const QuadratureSpec& spec) {
    const double r = ratio_from_spots(S1, S2, t, rm);
    const double tau = rm.T - t;
    if (r == 0.0) return numeraire_scale(S2, t, rm) * std::exp(-rm.q1 * tau) * rm.strike_at(rm.T);
    return numeraire_scale(S2, t, rm) * european_put_ratio(r, t, rm, spec).price;
}

} // namespace exchopt
