#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "exchopt/model.hpp"

namespace exchopt {

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail; ///< measured values and tolerances, 17 significant digits
};

struct ValidationOptions {
    std::uint64_t seed = 20240917;
    std::size_t n_paths = 100000; ///< base path count; the Fourier comparison uses twice this
    std::size_t n_steps = 64;
};

/// Reference models of the validation suite.
namespace reference {
TwoAssetModel margrabe();   ///< jump-free, q1 = q2 = 0
TwoAssetModel jump_free();  ///< sigma^2 = 0.07, q1 = q2 = 0.05
TwoAssetModel single_atom(); ///< jump_free plus a tilted atom z = -0.2, rate 0.1
TwoAssetModel point_mass(); ///< jump_free plus an upward atom (y1, y2) = (0.1, -0.1), rate 0.3
TwoAssetModel gaussian();   ///< jump_free plus Gaussian marks, rate 1, cov 0.04 I
std::vector<TwoAssetModel> corpus();
} // namespace reference

inline constexpr int kCheckCount = 10;

/// Runs criterion `id` in [1, 9]. Check 10 needs the other results and is
/// produced by run_validation.
CheckResult run_check(int id, const ValidationOptions& opts);

/// Reruns the Monte Carlo checks and compares their details byte for byte.
CheckResult check_reproducibility(const ValidationOptions& opts,
                                  const std::vector<CheckResult>& first_run);

/// All checks in order; `progress` is called after each one.
std::vector<CheckResult> run_validation(const ValidationOptions& opts,
                                        const std::function<void(const CheckResult&)>& progress = {});

} // namespace exchopt
