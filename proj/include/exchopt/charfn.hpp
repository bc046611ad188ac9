#pragma once

#include <complex>

#include "exchopt/model.hpp"

namespace exchopt {

using cplx = std::complex<double>;

/// Levy exponent of the log-ratio increment under the numeraire measure:
/// psi(u) = drift*iu - sigma^2 u^2 / 2 + int (e^{iuz} - 1) nu~(dz),
/// with drift = -(kappa + sigma^2/2) so that psi(0) = psi(-i) = 0.
struct CharExponent {
    double drift = 0.0;
    double sigma = 0.0;
    TiltedJumpLaw jumps = NoJumps{};

    explicit CharExponent(const ReducedModel& rm);

    cplx operator()(cplx u) const;

    /// Real cumulant exponent Lambda(c) = psi(-ic) = log E[e^{cY}] per unit time.
    double cumulant(double c) const;

    /// Mean of the increment per unit time; with `share_measure` the mean
    /// under the measure with density e^{Y} (the Pi1 measure).
    double mean(bool share_measure) const;
};

struct QuadratureSpec {
    double abs_tol = 1e-10;
    int max_panels = 2048;
    double truncation_margin = 45.0;
};

/// Validates the invariants of a quadrature override.
void validate(const QuadratureSpec& spec);

/// f(u, tau) = exp(tau * psi(u)). Throws FlaggedOverflow if Re(tau psi) > 700.
cplx char_fn(cplx u, double tau, const ReducedModel& rm);

/// Normalized European quote in ratio units. `price` is the call- or put-type
/// value depending on the entry point; `delta_r` is its derivative in r.
struct EuropeanQuote {
    double price = 0.0;
    double delta_r = 0.0;
    double pi1 = 0.0;
    double pi2 = 0.0;
    double truncation = 0.0; ///< upper limit U of the inversion integrals
    int panels = 0;          ///< 0 when a tail bound or closed limit short-circuits
    double quad_error = 0.0;
};

/// e^{-q1 tau} E[(R_T - M)^+ | R_t = r], M = K e^{(q1-q2)T}.
EuropeanQuote european_call_ratio(double r, double t, const ReducedModel& rm,
                                  const QuadratureSpec& spec = {});

/// e^{-q1 tau} E[(M - R_T)^+ | R_t = r], obtained from the call by parity.
EuropeanQuote european_put_ratio(double r, double t, const ReducedModel& rm,
                                 const QuadratureSpec& spec = {});

/// d/dr of the put-type value.
double european_delta_r(double r, double t, const ReducedModel& rm,
                        const QuadratureSpec& spec = {});

/// Physical price of the payoff (S1 - K S2)^+ at T.
double european_price_physical(double S1, double S2, double t, const ReducedModel& rm,
                               const QuadratureSpec& spec = {});

/// Physical price of the payoff (K S2 - S1)^+ at T.
double european_put_physical(double S1, double S2, double t, const ReducedModel& rm,
                             const QuadratureSpec& spec = {});

/// r = e^{(q1-q2)t} S1 / S2.
double ratio_from_spots(double S1, double S2, double t, const ReducedModel& rm);

/// Scale factor S2 e^{(q2-q1)t} converting normalized values to currency.
double numeraire_scale(double S2, double t, const ReducedModel& rm);

} // namespace exchopt
