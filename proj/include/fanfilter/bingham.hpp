#pragma once

// Bingham distribution on S^2 in the (kappa, beta) parameterization
//
//   f(x) = exp(kappa <mu1,x>^2 + beta <mu2,x>^2) / N(kappa, beta),
//
// its order-6 moment tensor (the convolution of the distribution with the
// rank-1 kernel <v,.>^6), and a rejection sampler.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "fanfilter/error.hpp"
#include "fanfilter/quadrature.hpp"
#include "fanfilter/tensor.hpp"

namespace fanfilter {

using Quat = Eigen::Quaterniond;

inline constexpr double kKappaMin = 2.1;
inline constexpr double kKappaMax = 89.0;
/// beta <= kappa - kBetaGap on the lookup-table domain.
inline constexpr double kBetaGap = 2.0;

/// One fiber compartment: volume fraction, orientation frame and fanning.
/// The rotation of q maps e_z to mu1 (main direction) and e_y to mu2
/// (direction of additional fanning).
struct BinghamCompartment {
    double alpha = 1.0;
    Quat q = Quat::Identity();
    double kappa = 10.0;
    double beta = 0.0;

    Mat3 frame() const { return q.toRotationMatrix(); }
    Vec3 mu1() const { return q * Vec3::UnitZ(); }
    Vec3 mu2() const { return q * Vec3::UnitY(); }
    Vec3 mu3() const { return mu1().cross(mu2()); }
};

inline void validate(const BinghamCompartment& c) {
    if (!(std::abs(c.q.norm() - 1.0) <= 1e-9)) throw ContractViolation("BinghamCompartment: quaternion not unit");
    if (!(c.alpha >= 0.0)) throw ContractViolation("BinghamCompartment: negative volume fraction");
    if (!(c.beta >= 0.0 && c.beta <= c.kappa)) throw DomainError("BinghamCompartment: need 0 <= beta <= kappa");
}

namespace detail {

inline void check_kappa_beta(double kappa, double beta) {
    if (!(kappa >= 0.0) || !(beta >= 0.0) || !(beta <= kappa) || !std::isfinite(kappa))
        throw DomainError("Bingham: need 0 <= beta <= kappa");
}

/// (a, b) exponent pairs of cos^2(phi) and sin^2(phi) with a + b <= 3.
inline constexpr std::array<std::array<int, 2>, 10> kAzimuthPairs = {{
    {0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3},
}};

/// Azimuthal sums of cos^{2a} sin^{2b} exp(beta (s^2 sin^2 phi - 1)) for every
/// polar node; depends on beta only, which lets a whole kappa row of the lookup
/// table share them.
struct AzimuthSums {
    std::vector<std::array<double, 10>> s;  // [polar node][pair]
};

inline AzimuthSums azimuth_sums(double beta) {
    const auto& rule = octant_rule();
    AzimuthSums out;
    out.s.resize(rule.polar_size());
    std::vector<double> e(rule.azimuth_size());
    for (std::size_t i = 0; i < rule.polar_size(); ++i) {
        const double s2 = 1.0 - rule.t[i] * rule.t[i];
        for (std::size_t j = 0; j < e.size(); ++j) e[j] = rule.wphi[j] * std::exp(beta * (s2 * rule.s2[j] - 1.0));
        auto& acc = out.s[i];
        acc.fill(0.0);
        for (std::size_t j = 0; j < e.size(); ++j) {
            const double c = rule.c2[j], s = rule.s2[j];
            const double w = e[j];
            acc[0] += w;
            acc[1] += w * c;
            acc[2] += w * s;
            acc[3] += w * c * c;
            acc[4] += w * c * s;
            acc[5] += w * s * s;
            acc[6] += w * c * c * c;
            acc[7] += w * c * c * s;
            acc[8] += w * c * s * s;
            acc[9] += w * s * s * s;
        }
    }
    return out;
}

/// wt_i * exp(kappa (t_i^2 - 1)) for every polar node.
inline std::vector<double> polar_weights(double kappa) {
    const auto& rule = octant_rule();
    std::vector<double> w(rule.polar_size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rule.wt[i] * std::exp(kappa * (rule.t[i] * rule.t[i] - 1.0));
    return w;
}

/// Octant integral of exp(kappa (t^2 - 1) + beta (y^2 - 1)).
inline double scaled_octant_mass(double kappa, const AzimuthSums& az) {
    const auto polar = polar_weights(kappa);
    double n = 0.0;
    for (std::size_t i = 0; i < polar.size(); ++i) n += polar[i] * az.s[i][0];
    return n;
}

/// Order-6 moment tensor E[x^{(x)6}] of the standard Bingham distribution from
/// its separated polar and azimuthal quadrature parts.
inline SymTensor6 moments_from_parts(const std::vector<double>& polar, const AzimuthSums& az) {
    const auto& rule = octant_rule();
    // sum_i w_i s^{2(a+b)} t^{2c} S_ab(i) for a+b+c = 3, and the mass sum_i w_i S_00(i)
    std::array<double, 10> num{};
    double mass = 0.0;
    for (std::size_t i = 0; i < rule.polar_size(); ++i) {
        const double t2 = rule.t[i] * rule.t[i];
        const double s2 = 1.0 - t2;
        const double w = polar[i];
        const auto& sa = az.s[i];
        mass += w * sa[0];
        const std::array<double, 4> tp = {1.0, t2, t2 * t2, t2 * t2 * t2};
        const std::array<double, 4> sp = {1.0, s2, s2 * s2, s2 * s2 * s2};
        for (std::size_t k = 0; k < 10; ++k) {
            const int a = kAzimuthPairs[k][0];
            const int b = kAzimuthPairs[k][1];
            const int c = 3 - a - b;
            num[k] += w * sp[static_cast<std::size_t>(a + b)] * tp[static_cast<std::size_t>(c)] * sa[k];
        }
    }
    SymTensor6 out;
    for (std::size_t k = 0; k < 10; ++k) {
        const int a = kAzimuthPairs[k][0];
        const int b = kAzimuthPairs[k][1];
        out.at(2 * a, 2 * b, 2 * (3 - a - b)) = num[k] / mass;
    }
    return out;
}

}  // namespace detail

/// N(kappa, beta) = integral over S^2 of exp(kappa z^2 + beta y^2).
inline double norm_const(double kappa, double beta) {
    detail::check_kappa_beta(kappa, beta);
    const auto az = detail::azimuth_sums(beta);
    return 8.0 * std::exp(kappa + beta) * detail::scaled_octant_mass(kappa, az);
}

inline double bingham_pdf(const Vec3& x, const BinghamCompartment& c) {
    detail::require_unit(x, "bingham_pdf");
    detail::check_kappa_beta(c.kappa, c.beta);
    const double a = c.mu1().dot(x), b = c.mu2().dot(x);
    // the normalizer costs a full quadrature; repeated queries usually share (kappa, beta)
    thread_local double last_kappa = -1.0, last_beta = -1.0, mass = 0.0;
    if (c.kappa != last_kappa || c.beta != last_beta) {
        mass = 8.0 * detail::scaled_octant_mass(c.kappa, detail::azimuth_sums(c.beta));
        last_kappa = c.kappa;
        last_beta = c.beta;
    }
    return std::exp(c.kappa * (a * a - 1.0) + c.beta * (b * b - 1.0)) / mass;
}

/// Moment tensor of the standard Bingham (main axis e_z, secondary e_y); equals
/// the unit-fraction convolution of the distribution with the rank-1 kernel.
inline SymTensor6 moment6_canonical(double kappa, double beta) {
    detail::check_kappa_beta(kappa, beta);
    return detail::moments_from_parts(detail::polar_weights(kappa), detail::azimuth_sums(beta));
}

/// Constants of the angular central Gaussian envelope for one (kappa, beta).
/// In the frame (mu1, mu2, mu3) the density is proportional to
/// exp(-x^T A x) with A = diag(0, kappa - beta, kappa); the envelope uses
/// Omega = I + 2A/b where b solves sum_i 1/(b + 2 lambda_i) = 1.
struct AcgEnvelope {
    std::array<double, 3> lambda{};
    std::array<double, 3> omega{};
    double b = 3.0;
    double log_scale = 0.0;  // log of exp((3-b)/2) (b/3)^{3/2}

    AcgEnvelope(double kappa, double beta) {
        detail::check_kappa_beta(kappa, beta);
        lambda = {0.0, kappa - beta, kappa};
        auto lhs = [&](double bb) {
            double s = 0.0;
            for (double l : lambda) s += 1.0 / (bb + 2.0 * l);
            return s;
        };
        double lo = 1.0, hi = 3.0;  // lhs(1) >= 1 >= lhs(3)
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            (lhs(mid) > 1.0 ? lo : hi) = mid;
        }
        b = 0.5 * (lo + hi);
        for (int i = 0; i < 3; ++i) omega[static_cast<std::size_t>(i)] = 1.0 + 2.0 * lambda[static_cast<std::size_t>(i)] / b;
        log_scale = 0.5 * (3.0 - b) + 1.5 * std::log(b / 3.0);
    }
};

inline constexpr int kMaxProposals = 10000;

/// Draws a direction from the compartment's Bingham distribution by rejection
/// from an angular central Gaussian envelope; the result is sign-flipped so
/// that <x, ref_dir> >= 0. `proposals`, if given, receives the proposal count.
template <class Rng>
Vec3 sample_bingham(const BinghamCompartment& c, const Vec3& ref_dir, Rng& rng, int* proposals = nullptr) {
    const AcgEnvelope env(c.kappa, c.beta);
    const Mat3 frame = c.frame();
    const Vec3 m1 = frame.col(2), m2 = frame.col(1), m3 = m1.cross(m2);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int k = 1; k <= kMaxProposals; ++k) {
        Eigen::Vector3d y;
        for (int i = 0; i < 3; ++i) y[i] = normal(rng) / std::sqrt(env.omega[static_cast<std::size_t>(i)]);
        const double n = y.norm();
        if (n == 0.0) continue;
        y /= n;
        double xax = 0.0, xox = 0.0;
        for (int i = 0; i < 3; ++i) {
            xax += env.lambda[static_cast<std::size_t>(i)] * y[i] * y[i];
            xox += env.omega[static_cast<std::size_t>(i)] * y[i] * y[i];
        }
        const double log_ratio = -xax + 1.5 * std::log(xox) + env.log_scale;
        if (std::log(uniform(rng)) < log_ratio) {
            if (proposals) *proposals = k;
            Vec3 x = y[0] * m1 + y[1] * m2 + y[2] * m3;
            x.normalize();
            return x.dot(ref_dir) < 0.0 ? Vec3(-x) : x;
        }
    }
    throw SamplingError("sample_bingham: no proposal accepted");
}

}  // namespace fanfilter
