#include "exchopt/numerics.hpp"

#include <numbers>
#include <stdexcept>
#include <utility>

namespace exchopt::numerics {

QuadratureRule gauss_legendre(std::size_t n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / static_cast<double>(j);
            }
            dp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

QuadratureRule gauss_hermite(std::size_t n) {
    // Newton on the orthonormal Hermite recurrence, seeded by the usual
    // asymptotic guesses for the largest roots.
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    const std::size_t m = (n + 1) / 2;
    const double dn = static_cast<double>(n);
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * dn + 1.0) - 1.85575 * std::pow(2.0 * dn + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(dn, 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * rule.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * rule.nodes[1];
        else
            z = 2.0 * z - rule.nodes[i - 2];
        double pp = 0.0;
        for (int it = 0; it < 200; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                const double dj = static_cast<double>(j);
                p1 = z * std::sqrt(2.0 / (dj + 1.0)) * p2 - std::sqrt(dj / (dj + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * dn) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / (pp * pp);
    }
    return rule;
}

const QuadratureRule& gl15() {
    static const QuadratureRule rule = gauss_legendre(15);
    return rule;
}

RootResult bisect(const std::function<double(double)>& f, double a, double b, double fa, double fb,
                  double xtol, int max_iter) {
    if (fa == 0.0) return {a, 0.0, 0};
    if (fb == 0.0) return {b, 0.0, 0};
    if ((fa > 0.0) == (fb > 0.0)) throw std::invalid_argument("bisect: bracket has no sign change");
    RootResult out;
    for (out.iterations = 0; out.iterations < max_iter && std::abs(b - a) > xtol;
         ++out.iterations) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return {m, 0.0, out.iterations + 1};
        if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    // Report the endpoint with the smaller residual.
    if (std::abs(fa) <= std::abs(fb)) {
        out.x = a;
        out.fx = fa;
    } else {
        out.x = b;
        out.fx = fb;
    }
    return out;
}

RootResult safeguarded_newton(const std::function<std::pair<double, double>(double)>& fdf,
                              double lo, double hi, double x0, double ftol, int max_iter) {
    auto [flo, dlo] = fdf(lo);
    (void)dlo;
    double x = std::clamp(x0, lo, hi);
    RootResult out;
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        auto [fx, dfx] = fdf(x);
        out.x = x;
        out.fx = fx;
        if (std::abs(fx) <= ftol) return out;
        // keep the bracket [lo, hi] with a sign change
        if ((fx > 0.0) == (flo > 0.0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        double next = (dfx != 0.0) ? x - fx / dfx : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x) return out;
        x = next;
    }
    return out;
}

} // namespace exchopt::numerics
