#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace fanfilter {

struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
inline GaussLegendre gauss_legendre(int n) {
    GaussLegendre g;
    g.nodes.assign(static_cast<std::size_t>(n), 0.0);
    g.weights.assign(static_cast<std::size_t>(n), 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.nodes[static_cast<std::size_t>(i)] = -x;
        g.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        g.weights[static_cast<std::size_t>(i)] = w;
        g.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return g;
}

/// Product rule on the first octant of the sphere for integrands that are even
/// in x, y and z. Polar part: the positive half of a Gauss-Legendre rule in
/// t = cos(theta); azimuth: trapezoid rule. The full-sphere equivalent is a
/// kGaussOrder x kAzimuth product grid; sphere integral = 8 * octant sum.
struct OctantRule {
    static constexpr std::uint32_t kGaussOrder = 256;
    static constexpr std::uint32_t kAzimuth = 512;
    static constexpr std::uint32_t kVersion = 1;

    std::vector<double> t, wt;     // polar nodes in (0, 1) and weights
    std::vector<double> c2, s2;    // cos^2(phi), sin^2(phi) on [0, pi/2]
    std::vector<double> wphi;      // trapezoid weights

    std::size_t polar_size() const { return t.size(); }
    std::size_t azimuth_size() const { return c2.size(); }
};

inline const OctantRule& octant_rule() {
    static const OctantRule rule = [] {
        OctantRule r;
        const auto g = gauss_legendre(static_cast<int>(OctantRule::kGaussOrder));
        for (std::size_t i = 0; i < g.nodes.size(); ++i)
            if (g.nodes[i] > 0.0) {
                r.t.push_back(g.nodes[i]);
                r.wt.push_back(g.weights[i]);
            }
        const int quarter = static_cast<int>(OctantRule::kAzimuth / 4);
        const double h = (std::numbers::pi / 2.0) / quarter;
        for (int j = 0; j <= quarter; ++j) {
            const double phi = h * j;
            const double c = std::cos(phi), s = std::sin(phi);
            r.c2.push_back(j == quarter ? 0.0 : c * c);
            r.s2.push_back(j == 0 ? 0.0 : s * s);
            r.wphi.push_back((j == 0 || j == quarter) ? 0.5 * h : h);
        }
        return r;
    }();
    return rule;
}

}  // namespace fanfilter
