#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "fanfilter/pipeline.hpp"

namespace testutil {

using namespace fanfilter;

inline const LutPair& luts() {
    static const LutPair p = [] {
        LutPair l{build_conv_lut(), {}};
        l.init = build_init_lut(l.conv);
        return l;
    }();
    return p;
}

inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double rad(double deg) { return deg * std::numbers::pi / 180.0; }

inline Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng), n(rng), n(rng));
    return v.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
}

inline SymTensor6 random_tensor(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SymTensor6 t;
    for (std::size_t i = 0; i < kNumCoeffs; ++i) t[i] = u(rng);
    return t;
}

/// Angle between axes in degrees.
inline double axis_deg(const Vec3& a, const Vec3& b) {
    return deg(std::acos(std::min(1.0, std::abs(a.normalized().dot(b.normalized())))));
}

/// Distance between unit quaternions up to sign.
inline double quat_dist(const Quat& a, const Quat& b) {
    return std::min((a.coeffs() - b.coeffs()).norm(), (a.coeffs() + b.coeffs()).norm());
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("fanfilter_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& p) { return detail::read_text(p.string()); }

}  // namespace testutil
