#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "exchopt/american.hpp"
#include "exchopt/charfn.hpp"
#include "exchopt/errors.hpp"
#include "exchopt/mc.hpp"
#include "exchopt/rng.hpp"
#include "oracles.hpp"

using namespace exchopt;

namespace {

ReducedModel jump_free(double q1 = 0.05, double q2 = 0.05) {
    return make_reduced(std::sqrt(0.07), NoJumps{}, q1, q2, 1.0, 1.0);
}

ReducedModel down_atom() {
    return make_reduced(0.2, TiltedAtoms{{{-0.2, 0.1}}}, 0.05, 0.05, 1.0, 1.0);
}

ReducedModel gaussian() {
    return make_reduced(0.18, TiltedGaussian{0.8, -0.05, 0.02}, 0.04, 0.01, 0.95, 1.5);
}

MCConfig small(std::size_t paths = 20000, std::size_t steps = 16) {
    MCConfig cfg;
    cfg.n_paths = paths;
    cfg.n_steps = steps;
    return cfg;
}

} // namespace

TEST(Rng, UniformMomentsAndRange) {
    StreamRng rng(7, 3);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        s += u;
        s2 += u * u;
    }
    EXPECT_NEAR(s / n, 0.5, 4 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12.0, 2e-3);
}

TEST(Rng, NormalMoments) {
    StreamRng rng(11, 0);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 0.015);
}

TEST(Rng, PoissonMeanAndVariance) {
    StreamRng rng(5, 9);
    const double mean = 0.35;
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double k = rng.poisson(mean);
        s += k;
        s2 += k * k;
    }
    const double m = s / n;
    EXPECT_NEAR(m, mean, 4 * std::sqrt(mean / n));
    EXPECT_NEAR(s2 / n - m * m, mean, 0.01);
}

TEST(Rng, StreamsAreIndependentOfOrder) {
    StreamRng a(42, 17);
    std::vector<std::uint64_t> first;
    for (int i = 0; i < 5; ++i) first.push_back(a.next_u64());
    StreamRng other(42, 3);
    for (int i = 0; i < 100; ++i) other.next_u64();
    StreamRng b(42, 17);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(b.next_u64(), first[i]);
    EXPECT_NE(StreamRng(42, 18).next_u64(), first[0]);
    EXPECT_NE(StreamRng(43, 17).next_u64(), first[0]);
}

TEST(Simulation, ShapeAndStart) {
    const auto batch = simulate_ratio_paths(down_atom(), 0.9, 0.25, 1.0, small(10, 16));
    EXPECT_EQ(batch.n_paths, 10u);
    EXPECT_EQ(batch.n_times(), 17u);
    EXPECT_EQ(batch.times.front(), 0.25);
    EXPECT_EQ(batch.times.back(), 1.0);
    for (std::size_t i = 0; i < batch.n_paths; ++i) EXPECT_DOUBLE_EQ(batch.ratio(i, 0), 0.9);
}

TEST(Simulation, Deterministic) {
    const auto a = simulate_ratio_paths(gaussian(), 1.0, 0.0, 1.5, small(501));
    const auto b = simulate_ratio_paths(gaussian(), 1.0, 0.0, 1.5, small(501));
    EXPECT_EQ(a.log_ratio, b.log_ratio);
    auto other_seed = small(501);
    other_seed.seed += 1;
    EXPECT_NE(a.log_ratio, simulate_ratio_paths(gaussian(), 1.0, 0.0, 1.5, other_seed).log_ratio);
}

TEST(Simulation, AntitheticPairsMirrorDiffusion) {
    const auto rm = jump_free();
    const auto batch = simulate_ratio_paths(rm, 1.0, 0.0, 1.0, small(4));
    const double drift = (-rm.kappa - 0.5 * rm.sigma * rm.sigma) / 16.0;
    for (std::size_t j = 1; j < batch.n_times(); ++j) {
        const double da = batch.path(0)[j] - batch.path(0)[j - 1] - drift;
        const double db = batch.path(1)[j] - batch.path(1)[j - 1] - drift;
        EXPECT_NEAR(da, -db, 1e-14);
    }
}

TEST(Simulation, JumpCountsArePoisson) {
    const auto rm = down_atom();
    auto cfg = small(40000);
    cfg.antithetic = false;
    const auto batch = simulate_ratio_paths(rm, 1.0, 0.0, 1.0, cfg);
    double s = 0.0;
    for (const auto& marks : batch.jump_marks) {
        s += static_cast<double>(marks.size());
        for (const auto& m : marks) {
            EXPECT_DOUBLE_EQ(m.z, -0.2);
            EXPECT_GE(m.time, 0.0);
            EXPECT_LE(m.time, 1.0);
        }
    }
    EXPECT_NEAR(s / cfg.n_paths, 0.1, 4 * std::sqrt(0.1 / cfg.n_paths));
}

TEST(Simulation, MartingaleAcrossCorpus) {
    for (const auto& rm : {jump_free(), down_atom(), gaussian()}) {
        const auto eu = mc_european(rm, 1.1, 0.0, small(100000));
        EXPECT_NEAR(eu.terminal_ratio.estimate, 1.1, 4 * eu.terminal_ratio.std_error);
    }
}

TEST(European, MatchesFourier) {
    for (const auto& rm : {jump_free(), down_atom(), gaussian()}) {
        for (double r : {0.85, 1.0}) {
            const auto eu = mc_european(rm, r, 0.0, small(100000));
            const double exact = european_put_ratio(r, 0.0, rm).price;
            EXPECT_NEAR(eu.put.estimate, exact, 3.5 * eu.put.std_error);
        }
    }
}

TEST(European, AntitheticReducesVariance) {
    const auto rm = jump_free();
    auto on = small(20000);
    auto off = on;
    off.antithetic = false;
    const auto a = mc_european(rm, 1.0, 0.0, on);
    const auto b = mc_european(rm, 1.0, 0.0, off);
    EXPECT_LE(a.put.std_error, b.put.std_error);
}

TEST(European, StepSizeDoesNotBias) {
    const auto rm = down_atom();
    const auto a = mc_european(rm, 1.0, 0.0, small(50000, 16));
    const auto b = mc_european(rm, 1.0, 0.0, small(50000, 32));
    EXPECT_LT(std::abs(a.put.estimate - b.put.estimate),
              2 * std::hypot(a.put.std_error, b.put.std_error));
}

TEST(Config, Validation) {
    EXPECT_THROW(validate(small(20000, 8)), PricingError);
    EXPECT_THROW(validate(small(500)), PricingError);
    EXPECT_NO_THROW(validate(small(500), false));
    auto cfg = small();
    cfg.basis_degree = 0;
    EXPECT_THROW(validate(cfg), PricingError);
}

TEST(Summarize, PairsAreFolded) {
    const std::vector<double> xs{1.0, 3.0, 2.0, 4.0};
    const auto plain = summarize(xs, false);
    const auto paired = summarize(xs, true);
    EXPECT_DOUBLE_EQ(plain.estimate, 2.5);
    EXPECT_DOUBLE_EQ(paired.estimate, 2.5);
    EXPECT_DOUBLE_EQ(paired.std_error, 0.5);
}

TEST(Lsmc, DominatesEuropean) {
    const auto rm = down_atom();
    const auto cfg = small(20000, 32);
    const auto am = lsmc_american(rm, 0.95, 0.0, cfg);
    const auto eu = mc_european(rm, 0.95, 0.0, cfg);
    EXPECT_GE(am.estimate, eu.put.estimate - 2 * am.std_error);
}

TEST(Lsmc, ShortHorizonIsIntrinsic) {
    auto rm = jump_free();
    rm.T = 1e-6;
    const auto am = lsmc_american(rm, 0.8, 0.0, small(20000, 16));
    EXPECT_NEAR(am.estimate, 0.2, 3 * am.std_error + 1e-6);
}

TEST(Lsmc, CloseToApproximationInTheMoney) {
    const auto rm = jump_free();
    const auto am = lsmc_american(rm, 0.8, 0.0, small(50000, 64));
    const double approx = american_price(0.8, 1.0, 0.0, rm).price;
    EXPECT_NEAR(am.estimate, approx, std::max(0.01 * approx, 3 * am.std_error));
}

TEST(Lsmc, Deterministic) {
    const auto a = lsmc_american(down_atom(), 1.0, 0.0, small(5000));
    const auto b = lsmc_american(down_atom(), 1.0, 0.0, small(5000));
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.std_error, b.std_error);
}

TEST(PremiumTerms, ZeroBoundaryGivesNothing) {
    const auto rm = down_atom();
    const auto paths = simulate_ratio_paths(rm, 1.0, 0.0, 1.0, small(2000));
    ExerciseBoundary eb;
    for (double t : {0.0, 0.5, 0.9}) eb.grid.push_back({t, 0.0, 1.0, -4.0, true});
    const auto terms = estimate_premium_terms(paths, eb, rm);
    EXPECT_EQ(terms.dividend.estimate, 0.0);
    EXPECT_EQ(terms.jump.estimate, 0.0);
}

TEST(PremiumTerms, GapThrows) {
    const auto rm = jump_free();
    const auto paths = simulate_ratio_paths(rm, 1.0, 0.0, 1.0, small(100));
    ExerciseBoundary eb;
    eb.grid.push_back({0.0, 0.6, 1.0, -4.0, true});
    eb.grid.push_back({0.5, std::nan(""), 0.0, 0.0, false});
    try {
        estimate_premium_terms(paths, eb, rm);
        FAIL();
    } catch (const PricingError& e) {
        EXPECT_EQ(e.code(), ErrorCode::BoundaryGap);
    }
}

TEST(PremiumTerms, IndependentSeedAgrees) {
    const auto rm = down_atom();
    auto cfg = small(20000, 32);
    std::vector<double> times;
    for (int j = 0; j < 32; ++j) times.push_back(j / 32.0);
    const auto eb = build_boundary_at(rm, times);
    const auto a = estimate_premium_terms(simulate_ratio_paths(rm, 0.8, 0.0, 1.0, cfg), eb, rm);
    cfg.seed = 99;
    const auto b = estimate_premium_terms(simulate_ratio_paths(rm, 0.8, 0.0, 1.0, cfg), eb, rm);
    EXPECT_NEAR(a.combined.estimate, b.combined.estimate,
                3 * std::hypot(a.combined.std_error, b.combined.std_error));
}

TEST(PathDump, WritesRowsAndGuardsSize) {
    const auto batch = simulate_ratio_paths(jump_free(), 1.0, 0.0, 1.0, small(3, 16));
    const auto file = (std::filesystem::temp_directory_path() / "exchopt_paths.csv").string();
    write_paths_csv(batch, file);
    std::ifstream in(file);
    std::string line;
    int rows = 0;
    std::getline(in, line);
    EXPECT_EQ(line, "path_id,t,R");
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3 * 17);
    std::remove(file.c_str());
    EXPECT_THROW(write_paths_csv(batch, file, 10), PricingError);
}
