#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "exchopt/charfn.hpp"
#include "exchopt/errors.hpp"
#include "oracles.hpp"

using namespace exchopt;

namespace {

ReducedModel jump_free(double q1 = 0.0, double q2 = 0.0, double T = 1.0) {
    return make_reduced(std::sqrt(0.07), NoJumps{}, q1, q2, 1.0, T);
}

ReducedModel one_atom() {
    return make_reduced(0.2, TiltedAtoms{{{-0.2, 0.3}}}, 0.05, 0.03, 1.0, 1.0);
}

ReducedModel two_atoms() {
    return make_reduced(0.25, TiltedAtoms{{{-0.15, 0.4}, {0.1, 0.2}}}, 0.02, 0.04, 1.1, 0.75);
}

ReducedModel gaussian() {
    return make_reduced(0.18, TiltedGaussian{0.8, -0.05, 0.02}, 0.04, 0.01, 0.95, 1.5);
}

std::vector<ReducedModel> corpus() { return {jump_free(0.05, 0.03), one_atom(), two_atoms(), gaussian()}; }

// Poisson mixture of Black prices: exact for a single atom or Gaussian marks.
double mixture_put(double r, double t, const ReducedModel& rm) {
    const double tau = rm.T - t;
    const double M = rm.strike_at(rm.T);
    double lam = 0.0, zmean = 0.0, zvar = 0.0;
    if (const auto* a = std::get_if<TiltedAtoms>(&rm.jumps)) {
        lam = a->points.at(0).lambda;
        zmean = a->points.at(0).z;
    } else if (const auto* g = std::get_if<TiltedGaussian>(&rm.jumps)) {
        lam = g->lambda;
        zmean = g->mean;
        zvar = g->var;
    }
    double total = 0.0, pn = std::exp(-lam * tau);
    for (int n = 0; n < 80; ++n) {
        if (n > 0) pn *= lam * tau / n;
        const double fwd = r * std::exp(-rm.kappa * tau + n * zmean + 0.5 * n * zvar);
        const double sig = std::sqrt(rm.sigma * rm.sigma + n * zvar / tau);
        total += pn * oracle::black_put(fwd, M, sig, tau, rm.q1);
    }
    return total;
}

} // namespace

TEST(CharFn, NormalizationAndMartingale) {
    for (const auto& rm : corpus()) {
        for (double tau : {0.01, 0.5, 1.0, 3.0}) {
            EXPECT_EQ(char_fn(0.0, tau, rm), cplx(1.0, 0.0));
            EXPECT_LT(std::abs(char_fn(cplx(0.0, -1.0), tau, rm) - 1.0), 1e-12);
            for (double u = 0.1; u <= 100.0; u *= 1.5)
                EXPECT_LE(std::abs(char_fn(u, tau, rm)), 1.0);
        }
    }
}

TEST(CharFn, JumpFreeValue) {
    const auto rm = make_reduced(0.2, NoJumps{}, 0.0, 0.0, 1.0, 1.0);
    const cplx f = char_fn(1.0, 1.0, rm);
    EXPECT_NEAR(f.real(), 0.980002640106664645, 1e-15);
    EXPECT_NEAR(f.imag(), -0.0196026665607090798, 1e-15);
}

TEST(CharFn, OverflowIsFlagged) {
    const auto rm = jump_free();
    try {
        char_fn(cplx(0.0, -200.0), 1.0, rm);
        FAIL();
    } catch (const PricingError& e) {
        EXPECT_EQ(e.code(), ErrorCode::FlaggedOverflow);
    }
}

TEST(European, MargrabeReference) {
    const auto rm = jump_free();
    const double price = european_price_physical(100.0, 100.0, 0.0, rm);
    EXPECT_NEAR(price, 10.5243157811252542, 1e-6);
    EXPECT_NEAR(price, oracle::margrabe(100, 100, 1, 0.2, 0.3, 0.5, 0, 0, 1), 1e-6);
    EXPECT_NEAR(european_put_ratio(1.0, 0.0, rm).price, price / 100.0, 1e-8);
}

TEST(European, JumpFreeMatchesBlackOnGrid) {
    const auto rm = jump_free(0.05, 0.03, 2.0);
    const double M = rm.strike_at(rm.T);
    const double sig = rm.sigma;
    for (double r : {0.6, 0.85, 1.0, 1.2, 1.6}) {
        for (double t : {0.0, 0.5, 1.0, 1.5, 1.95}) {
            const double tau = rm.T - t;
            const auto call = european_call_ratio(r, t, rm);
            const auto put = european_put_ratio(r, t, rm);
            EXPECT_NEAR(call.price, oracle::black_call(r, M, sig, tau, rm.q1), 1e-6);
            EXPECT_NEAR(put.price, oracle::black_put(r, M, sig, tau, rm.q1), 1e-6);
            EXPECT_NEAR(put.delta_r, oracle::black_put_delta(r, M, sig, tau, rm.q1), 1e-6);
        }
    }
}

TEST(European, AtmPutDelta) {
    EXPECT_NEAR(european_delta_r(1.0, 0.0, jump_free()), -0.447378421094373729, 1e-8);
}

TEST(European, JumpModelsMatchPoissonMixture) {
    for (const auto& rm : {one_atom(), gaussian()}) {
        for (double r : {0.7, 1.0, 1.3})
            for (double t : {0.0, 0.5 * rm.T})
                EXPECT_NEAR(european_put_ratio(r, t, rm).price, mixture_put(r, t, rm), 1e-8)
                    << "r=" << r << " t=" << t;
    }
}

TEST(European, Limits) {
    const auto rm = one_atom();
    EXPECT_NEAR(european_call_ratio(1e-6, 0.0, rm).price, 0.0, 1e-12);
    EXPECT_NEAR(european_put_ratio(1e3, 0.0, rm).price, 0.0, 1e-12);
    EXPECT_NEAR(european_delta_r(1e3, 0.0, rm), 0.0, 1e-12);
    EXPECT_NEAR(european_delta_r(1e-6, 0.0, rm), -std::exp(-rm.q1 * rm.T), 1e-12);

    auto zero_strike = rm;
    zero_strike.K = 0.0;
    EXPECT_DOUBLE_EQ(european_call_ratio(0.8, 0.25, zero_strike).price,
                     std::exp(-rm.q1 * 0.75) * 0.8);
}

TEST(European, ParityAndHomogeneity) {
    for (const auto& rm : corpus()) {
        const double M = rm.strike_at(rm.T);
        for (double r : {0.5, 0.9, 1.0, 1.4}) {
            const double disc = std::exp(-rm.q1 * rm.T);
            const double call = european_call_ratio(r, 0.0, rm).price;
            const double put = european_put_ratio(r, 0.0, rm).price;
            EXPECT_LT(std::abs(put - call + disc * (r - M)), 1e-12);
        }
        const double p1 = european_price_physical(90.0, 100.0, 0.2, rm);
        const double p2 = european_price_physical(180.0, 200.0, 0.2, rm);
        EXPECT_NEAR(p2, 2.0 * p1, 1e-10);
    }
    EXPECT_EQ(european_price_physical(0.0, 100.0, 0.0, jump_free()), 0.0);
}

TEST(European, NoArbitrageEnvelopeAndMonotonicity) {
    for (const auto& rm : corpus()) {
        const double M = rm.strike_at(rm.T);
        const double disc = std::exp(-rm.q1 * rm.T);
        double prev_call = -1.0, prev_put = 1e9;
        for (int i = 0; i < 20; ++i) {
            const double r = 0.4 + 0.06 * i;
            const double call = european_call_ratio(r, 0.0, rm).price;
            const double put = european_put_ratio(r, 0.0, rm).price;
            EXPECT_GE(call, std::max(0.0, disc * (r - M)));
            EXPECT_LE(call, disc * r);
            EXPECT_GE(put, std::max(0.0, disc * (M - r)));
            EXPECT_LE(put, disc * M);
            EXPECT_GT(call, prev_call - 1e-10);
            EXPECT_LT(put, prev_put + 1e-10);
            prev_call = call;
            prev_put = put;
        }
    }
}

TEST(European, DeltaMatchesFiniteDifference) {
    for (const auto& rm : corpus()) {
        for (double r : {0.7, 1.0, 1.25}) {
            const double h = 1e-5 * r;
            const double fd = (european_put_ratio(r + h, 0.1, rm).price -
                               european_put_ratio(r - h, 0.1, rm).price) /
                              (2 * h);
            EXPECT_NEAR(european_delta_r(r, 0.1, rm), fd, 1e-6);
        }
    }
}

TEST(European, TruncationIsSound) {
    QuadratureSpec base;
    QuadratureSpec doubled = base;
    doubled.truncation_margin *= 4.0; // U scales with sqrt(margin)
    for (const auto& rm : corpus()) {
        const auto a = european_call_ratio(1.05, 0.0, rm, base);
        const auto b = european_call_ratio(1.05, 0.0, rm, doubled);
        EXPECT_NEAR(b.truncation, 2.0 * a.truncation, 1e-9 * a.truncation);
        EXPECT_LT(std::abs(a.price - b.price), base.abs_tol);
    }
}

TEST(European, QuadratureBudgetExhaustion) {
    QuadratureSpec tight;
    tight.abs_tol = 1e-300;
    tight.max_panels = 8;
    try {
        european_call_ratio(1.0, 0.0, one_atom(), tight);
        FAIL();
    } catch (const PricingError& e) {
        EXPECT_EQ(e.code(), ErrorCode::QuadratureNotConverged);
    }
}
