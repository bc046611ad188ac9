#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <span>
#include <vector>

namespace exchopt::numerics {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// ---------------------------------------------------------------------------
// Fixed rules
// ---------------------------------------------------------------------------

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(std::size_t n);

/// n-point Gauss-Hermite rule for the weight e^{-x^2} on the real line.
QuadratureRule gauss_hermite(std::size_t n);

/// The 15-point Gauss-Legendre rule used by the adaptive integrator.
const QuadratureRule& gl15();

// ---------------------------------------------------------------------------
// Adaptive panel bisection
// ---------------------------------------------------------------------------

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
    bool converged = false;
};

/// Vector-valued result; component errors are summed in the convergence test.
template <std::size_t N>
struct AdaptiveResultN {
    std::array<double, N> value{};
    double error = 0.0;
    int panels = 0;
    bool converged = false;
};

namespace detail {

template <std::size_t N, class F>
std::array<double, N> gl15_panel(const F& f, double a, double b) {
    const auto& rule = gl15();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    std::array<double, N> acc{};
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const std::array<double, N> v = f(mid + half * rule.nodes[i]);
        for (std::size_t c = 0; c < N; ++c) acc[c] += rule.weights[i] * v[c];
    }
    for (auto& x : acc) x *= half;
    return acc;
}

} // namespace detail

/// Integrates a vector-valued f over [a, b]. Each panel carries a 15-point
/// estimate from both halves; the panel error is the gap to the whole-panel
/// estimate. The worst panel is bisected until the summed error plus
/// `extra_error` drops below `abs_tol` or `max_panels` is reached.
template <std::size_t N, class F>
AdaptiveResultN<N> integrate_adaptive(const F& f, double a, double b, double abs_tol,
                                      int max_panels, int initial_panels = 8,
                                      double extra_error = 0.0) {
    struct Panel {
        double a, b;
        std::array<double, N> fine;
        std::array<double, N> left, right;
        double err;
        bool operator<(const Panel& o) const { return err < o.err; }
    };
    auto make_panel = [&](double lo, double hi, const std::array<double, N>& coarse) {
        const double mid = 0.5 * (lo + hi);
        Panel p{lo, hi, {}, detail::gl15_panel<N>(f, lo, mid), detail::gl15_panel<N>(f, mid, hi),
                0.0};
        double e = 0.0;
        for (std::size_t c = 0; c < N; ++c) {
            p.fine[c] = p.left[c] + p.right[c];
            e += std::abs(p.fine[c] - coarse[c]);
        }
        p.err = e;
        return p;
    };

    std::priority_queue<Panel> heap;
    initial_panels = std::max(1, initial_panels);
    const double w = (b - a) / initial_panels;
    for (int k = 0; k < initial_panels; ++k) {
        const double lo = a + k * w;
        const double hi = (k + 1 == initial_panels) ? b : lo + w;
        heap.push(make_panel(lo, hi, detail::gl15_panel<N>(f, lo, hi)));
    }
    auto total_error = [&] {
        double e = 0.0;
        // priority_queue hides its container; copy is cheap at these sizes
        auto copy = heap;
        while (!copy.empty()) {
            e += copy.top().err;
            copy.pop();
        }
        return e;
    };

    double err = total_error();
    while (err + extra_error > abs_tol && static_cast<int>(heap.size()) < max_panels) {
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel l = make_panel(worst.a, mid, worst.left);
        Panel r = make_panel(mid, worst.b, worst.right);
        err += l.err + r.err - worst.err;
        heap.push(std::move(l));
        heap.push(std::move(r));
    }

    AdaptiveResultN<N> out;
    out.panels = static_cast<int>(heap.size());
    out.error = 0.0;
    while (!heap.empty()) {
        const Panel& p = heap.top();
        for (std::size_t c = 0; c < N; ++c) out.value[c] += p.fine[c];
        out.error += p.err;
        heap.pop();
    }
    out.error += extra_error;
    out.converged = out.error <= abs_tol;
    return out;
}

/// Scalar convenience wrapper.
template <class F>
AdaptiveResult integrate_adaptive(const F& f, double a, double b, double abs_tol,
                                  int max_panels) {
    auto r = integrate_adaptive<1>([&](double x) { return std::array<double, 1>{f(x)}; }, a, b,
                                   abs_tol, max_panels);
    return {r.value[0], r.error, r.panels, r.converged};
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

struct RootResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
};

/// Bisection on a sign-changing bracket [a, b] down to width `xtol`. The
/// caller guarantees fa and fb have opposite signs (or one is zero).
RootResult bisect(const std::function<double(double)>& f, double a, double b, double fa, double fb,
                  double xtol, int max_iter = 400);

/// Newton steps safeguarded by a bracket: a step that leaves [lo, hi] falls
/// back to bisection. `fdf` returns (f, f').
RootResult safeguarded_newton(const std::function<std::pair<double, double>(double)>& fdf,
                              double lo, double hi, double x0, double ftol, int max_iter = 100);

} // namespace exchopt::numerics
