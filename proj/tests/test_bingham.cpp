#include <gtest/gtest.h>

#include "common.hpp"

using namespace fanfilter;
using namespace testutil;

namespace {

// Independent oracle: composite Simpson over (cos theta, phi) on the upper
// hemisphere; every integrand below is antipodally symmetric.
template <class F>
double sphere_integral(F&& f, int nu = 2000, int nphi = 800) {
    const double two_pi = 2.0 * std::numbers::pi;
    auto w = [](int k, int n) { return (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0); };
    double s = 0.0;
    for (int i = 0; i <= nu; ++i) {
        const double u = static_cast<double>(i) / nu, r = std::sqrt(std::max(0.0, 1.0 - u * u));
        double row = 0.0;
        for (int j = 0; j <= nphi; ++j) {
            const double p = two_pi * j / nphi;
            row += w(j, nphi) * f(Vec3(r * std::cos(p), r * std::sin(p), u));
        }
        s += w(i, nu) * row * (two_pi / nphi / 3.0);
    }
    return 2.0 * s / nu / 3.0;
}

// 1D Simpson on [-1, 1] of exp(k t^2), for the Watson normalizer.
double watson_1d(double k) {
    const int n = 20000;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = -1.0 + 2.0 * i / n;
        s += ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0)) * std::exp(k * t * t);
    }
    return s * (2.0 / n) / 3.0;
}

BinghamCompartment compartment(double kappa, double beta, const Mat3& frame) {
    BinghamCompartment c;
    c.q = Quat(frame);
    c.kappa = kappa;
    c.beta = beta;
    return c;
}

}  // namespace

TEST(Bingham, NormConstUniform) { EXPECT_NEAR(norm_const(0, 0), 4.0 * std::numbers::pi, 1e-12); }

TEST(Bingham, NormConstWatsonReduction) {
    EXPECT_NEAR(watson_1d(1.0), 2.925303, 1e-6);
    for (double k : {1.0, 5.0, 30.0, 89.0}) {
        const double ref = 2.0 * std::numbers::pi * watson_1d(k);
        EXPECT_NEAR(norm_const(k, 0), ref, 1e-7 * ref) << k;
    }
    EXPECT_NEAR(norm_const(1, 0), 18.38, 0.01);
}

TEST(Bingham, NormConstAgainstSphereQuadrature) {
    for (auto [k, b] : {std::pair{10.0, 3.0}, {30.0, 25.0}, {60.0, 12.0}}) {
        const double ref = sphere_integral([&](const Vec3& x) { return std::exp(k * x.z() * x.z() + b * x.y() * x.y()); });
        EXPECT_NEAR(norm_const(k, b), ref, 1e-6 * ref);
    }
}

TEST(Bingham, NormConstMonotone) {
    double prev = 0.0;
    for (double k = 0.0; k <= 89.0; k += 4.45) {
        const double n = norm_const(k, 0.0);
        EXPECT_GT(n, prev);
        prev = n;
        if (k >= 2.0) {
            EXPECT_LT(norm_const(k, 0.3 * k), norm_const(k, 0.6 * k));
        }
    }
}

TEST(Bingham, DomainErrors) {
    EXPECT_THROW(norm_const(5, 6), DomainError);
    EXPECT_THROW(norm_const(5, -1), DomainError);
    EXPECT_THROW(moment6_canonical(5, 6), DomainError);
}

TEST(Bingham, PdfExtremesAndSymmetry) {
    std::mt19937_64 rng(21);
    const auto c = compartment(30, 10, random_rotation(rng));
    const double n = norm_const(30, 10);
    EXPECT_NEAR(bingham_pdf(c.mu1(), c), std::exp(30.0) / n, 1e-9 * std::exp(30.0) / n);
    EXPECT_NEAR(bingham_pdf(c.mu3(), c), 1.0 / n, 1e-9 / n);
    for (int k = 0; k < 200; ++k) {
        const Vec3 x = random_unit(rng);
        const double p = bingham_pdf(x, c);
        EXPECT_LE(p, bingham_pdf(c.mu1(), c) * (1 + 1e-12));
        EXPECT_GE(p, bingham_pdf(c.mu3(), c) * (1 - 1e-12));
        EXPECT_NEAR(p, bingham_pdf(-x, c), 1e-12 * p);
    }
}

TEST(Bingham, PdfIntegratesToOne) {
    std::mt19937_64 rng(22);
    for (auto [k, b] : {std::pair{2.1, 0.0}, {10.0, 5.0}, {50.0, 40.0}}) {
        const auto c = compartment(k, b, random_rotation(rng));
        EXPECT_NEAR(sphere_integral([&](const Vec3& x) { return bingham_pdf(x, c); }), 1.0, 1e-5);
    }
}

TEST(Bingham, UniformMoments) {
    const auto t = moment6_canonical(0, 0);
    EXPECT_NEAR(t.at(6, 0, 0), 1.0 / 7.0, 1e-12);
    EXPECT_NEAR(t.at(0, 6, 0), 1.0 / 7.0, 1e-12);
    EXPECT_NEAR(t.at(0, 0, 6), 1.0 / 7.0, 1e-12);
    EXPECT_NEAR(t.at(2, 0, 4), 1.0 / 35.0, 1e-12);
    EXPECT_NEAR(t.at(2, 2, 2), 1.0 / 105.0, 1e-12);
}

TEST(Bingham, MomentsMatchQuadratureOracle) {
    for (auto [k, b] : {std::pair{10.0, 3.0}, {40.0, 30.0}}) {
        const auto t = moment6_canonical(k, b);
        const double n = norm_const(k, b);
        for (const auto& m : kMonomials) {
            const double ref = sphere_integral([&](const Vec3& x) {
                                   return std::pow(x.x(), m.a) * std::pow(x.y(), m.b) * std::pow(x.z(), m.c) *
                                          std::exp(k * x.z() * x.z() + b * x.y() * x.y());
                               }) / n;
            if (m.a % 2 || m.b % 2 || m.c % 2)
                EXPECT_EQ(t.at(m.a, m.b, m.c), 0.0);
            else
                EXPECT_NEAR(t.at(m.a, m.b, m.c), ref, 1e-6 * std::max(ref, 1e-3)) << m.a << m.b << m.c;
        }
    }
}

TEST(Bingham, MomentTraceIdentity) {
    for (auto [k, b] : {std::pair{0.0, 0.0}, {2.1, 0.1}, {30.0, 10.0}, {89.0, 87.0}}) {
        const auto t = moment6_canonical(k, b);
        double s = 0.0;
        for (int i = 0; i <= 3; ++i)
            for (int j = 0; i + j <= 3; ++j) {
                const int l = 3 - i - j;
                s += 6.0 / (std::tgamma(i + 1) * std::tgamma(j + 1) * std::tgamma(l + 1)) * t.at(2 * i, 2 * j, 2 * l);
            }
        EXPECT_NEAR(s, 1.0, 1e-12) << k << " " << b;
    }
}

TEST(Bingham, ConcentrationLimit) {
    EXPECT_GT(moment6_canonical(89, 0).at(0, 0, 6), 0.9);
    double prev = std::numeric_limits<double>::infinity();
    for (double k = 2.1; k <= 89.0; k += 2.9) {
        const double d = apolar_norm(moment6_canonical(k, 0) - rank1(1, Vec3::UnitZ()));
        EXPECT_LT(d, prev);
        prev = d;
    }
}

TEST(Bingham, MomentsAreWatsonSymmetricAtBetaZero) {
    const auto t = moment6_canonical(25, 0);
    std::mt19937_64 rng(23);
    for (int k = 0; k < 50; ++k) {
        const Vec3 v = random_unit(rng);
        const double phi = std::uniform_real_distribution<double>(0, 6.283)(rng);
        const Vec3 w = Eigen::AngleAxisd(phi, Vec3::UnitZ()) * v;
        EXPECT_NEAR(eval_poly(t, v), eval_poly(t, w), 1e-12);
    }
}

TEST(Bingham, SamplerConcentrated) {
    std::mt19937_64 rng(24);
    const auto c = compartment(89, 0, Mat3::Identity());
    double dev = 0.0;
    for (int k = 0; k < 10000; ++k) dev += deg(std::acos(std::min(1.0, std::abs(sample_bingham(c, Vec3::UnitZ(), rng).z()))));
    EXPECT_LT(dev / 10000, 10.0);
}

TEST(Bingham, SamplerAnisotropy) {
    std::mt19937_64 rng(25);
    const auto c = compartment(30, 25, random_rotation(rng));
    const int n = 20000;
    std::vector<double> a2(n), a3(n);
    for (int k = 0; k < n; ++k) {
        const Vec3 x = sample_bingham(c, c.mu1(), rng);
        a2[static_cast<std::size_t>(k)] = x.dot(c.mu2());
        a3[static_cast<std::size_t>(k)] = x.dot(c.mu3());
    }
    auto var = [](const std::vector<double>& v) {
        double m = 0, s = 0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        for (double x : v) s += (x - m) * (x - m);
        return s / static_cast<double>(v.size() - 1);
    };
    auto var_se = [&](const std::vector<double>& v) {
        // standard error of the variance estimate from the fourth moment
        double m4 = 0;
        for (double x : v) m4 += x * x * x * x;
        m4 /= static_cast<double>(v.size());
        const double s2 = var(v);
        return std::sqrt((m4 - s2 * s2) / static_cast<double>(v.size()));
    };
    EXPECT_GT(var(a2) - var(a3), 5.0 * std::hypot(var_se(a2), var_se(a3)));
}

TEST(Bingham, SamplerHemisphereAndAcceptance) {
    std::mt19937_64 rng(26);
    for (auto [k, b] : {std::pair{2.1, 0.0}, {2.1, 0.1}, {10.0, 8.0}, {45.0, 20.0}, {89.0, 0.0}, {89.0, 87.0}}) {
        const auto c = compartment(k, b, random_rotation(rng));
        const Vec3 ref = random_unit(rng);
        long proposals = 0;
        const int n = 4000;
        for (int s = 0; s < n; ++s) {
            int p = 0;
            const Vec3 x = sample_bingham(c, ref, rng, &p);
            proposals += p;
            EXPECT_GE(x.dot(ref), 0.0);
            EXPECT_NEAR(x.norm(), 1.0, 1e-12);
        }
        EXPECT_GT(static_cast<double>(n) / static_cast<double>(proposals), 0.3) << k << " " << b;
    }
}

TEST(Bingham, SamplerDistributionMatchesQuadrature) {
    // sup-norm distance between the empirical CDF of <x, mu1>^2 and the oracle CDF
    std::mt19937_64 rng(27);
    for (auto [k, b] : {std::pair{10.0, 0.0}, {30.0, 10.0}, {80.0, 40.0}}) {
        const auto c = compartment(k, b, random_rotation(rng));
        const int n = 100000;
        std::vector<double> s(n);
        for (auto& v : s) v = std::pow(sample_bingham(c, c.mu1(), rng).dot(c.mu1()), 2);
        std::sort(s.begin(), s.end());

        // oracle: density of t = u^2 on the canonical hemisphere, integrated over phi
        const int nu = 20000, nphi = 256;
        std::vector<double> cdf_u(nu + 1, 0.0);
        auto dens = [&](double u) {
            double row = 0.0;
            for (int j = 0; j < nphi; ++j) {
                const double p = 2.0 * std::numbers::pi * (j + 0.5) / nphi;
                const double y2 = (1 - u * u) * std::sin(p) * std::sin(p);
                row += std::exp(k * (u * u - 1) + b * (y2 - 1));
            }
            return row;
        };
        double prev = dens(0.0);
        for (int i = 1; i <= nu; ++i) {
            const double u0 = static_cast<double>(i - 1) / nu, u1 = static_cast<double>(i) / nu;
            const double cur = dens(u1);
            cdf_u[static_cast<std::size_t>(i)] = cdf_u[static_cast<std::size_t>(i - 1)] +
                                                 (dens(0.5 * (u0 + u1)) * 4 + prev + cur) / 6.0 / nu;
            prev = cur;
        }
        for (auto& v : cdf_u) v /= cdf_u.back();
        double sup = 0.0;
        for (int q = 1; q < 200; ++q) {
            const double t = q / 200.0;
            const double u = std::sqrt(t);
            const std::size_t i = static_cast<std::size_t>(u * nu);
            const double oracle = cdf_u[i] + (cdf_u[std::min<std::size_t>(i + 1, nu)] - cdf_u[i]) * (u * nu - i);
            const double emp = static_cast<double>(std::upper_bound(s.begin(), s.end(), t) - s.begin()) / n;
            sup = std::max(sup, std::abs(emp - oracle));
        }
        EXPECT_LT(sup, 0.01) << k << " " << b;
    }
}

TEST(Bingham, ConvResponseWatsonSymmetry) {
    const auto& lut = luts().conv;
    std::mt19937_64 rng(28);
    const auto c = compartment(17.3, 0, random_rotation(rng));
    const auto t = conv_response(c, lut);
    for (int k = 0; k < 50; ++k) {
        const Vec3 v = random_unit(rng);
        const Vec3 w = Eigen::AngleAxisd(std::uniform_real_distribution<double>(0, 6.283)(rng), c.mu1()) * v;
        EXPECT_NEAR(eval_poly(t, v), eval_poly(t, w), 1e-9);
    }
}
