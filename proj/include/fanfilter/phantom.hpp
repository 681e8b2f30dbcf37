#pragma once

// Synthetic fODF fields with known streamlines: straight, crossing, arc and fan
// bundles. Every voxel holds the sum of the responses of the bundles through
// it, weighted by a membership that falls off linearly over two voxels.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fanfilter/bingham.hpp"
#include "fanfilter/error.hpp"
#include "fanfilter/field.hpp"
#include "fanfilter/lut.hpp"
#include "fanfilter/quaternion.hpp"
#include "fanfilter/streamline.hpp"
#include "fanfilter/tracker.hpp"

namespace fanfilter {

enum class PhantomShape { straight, crossing, arc, fan };

inline const char* shape_name(PhantomShape s) {
    switch (s) {
        case PhantomShape::straight: return "straight";
        case PhantomShape::crossing: return "crossing";
        case PhantomShape::arc: return "arc";
        case PhantomShape::fan: return "fan";
    }
    return "?";
}

struct PhantomSpec {
    PhantomShape shape = PhantomShape::straight;
    std::array<std::uint32_t, 3> dims{32, 32, 48};
    Vec3 spacing = Vec3::Ones();
    double kappa = 30.0;
    double beta = 0.0;
    double noise_sigma = 0.0;
    double radius_mm = 3.0;
    double margin_mm = 4.0;         // bundle ends stay this far from the grid faces
    double crossing_angle_deg = 90.0;
    double arc_radius_mm = 20.0;
    double fan_half_angle_mu2_deg = 30.0;
    double fan_half_angle_mu3_deg = 0.0;
    double fan_start_frac = 0.35;   // stem/wedge junction as a fraction of the bundle length
    double ref_spacing_mm = 1.0;    // lattice spacing of reference streamline offsets
    double seed_plane_frac = 0.02;  // seed plane position as a fraction of the bundle length
    double fan_window_mm = 0.0;     // width over which fan spread is measured; 0 = voxel size
    std::uint64_t rng_seed = 1;

    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (dims[static_cast<std::size_t>(a)] < 2) throw ConfigError("phantom dims must be >= 2");
            if (!(spacing[a] > 0.0)) throw ConfigError("phantom spacing must be positive");
        }
        if (!(kappa >= kKappaMin && kappa <= kKappaMax)) throw ConfigError("phantom kappa outside [2.1, 89]");
        if (!(beta >= 0.0 && beta <= kappa - kBetaGap)) throw ConfigError("phantom beta outside [0, kappa - 2]");
        if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
        if (!(fan_window_mm >= 0.0)) throw ConfigError("fan window must be >= 0");
        if (!(radius_mm > 0.0) || !(margin_mm >= 0.0) || !(ref_spacing_mm > 0.0))
            throw ConfigError("radius, margin and reference spacing must be positive");
        for (double a : {fan_half_angle_mu2_deg, fan_half_angle_mu3_deg})
            if (!(a >= 0.0 && a <= 60.0)) throw ConfigError("fan half-angles must lie in [0, 60] degrees");
        if (!(crossing_angle_deg > 0.0 && crossing_angle_deg <= 90.0))
            throw ConfigError("crossing angle must lie in (0, 90] degrees");
        if (!(arc_radius_mm > radius_mm)) throw ConfigError("arc radius must exceed the bundle radius");
        if (!(fan_start_frac > 0.0 && fan_start_frac < 1.0) || !(seed_plane_frac > 0.0 && seed_plane_frac < 1.0))
            throw ConfigError("fan_start_frac and seed_plane_frac must lie in (0, 1)");
    }
};

struct Phantom {
    FodfField field;
    std::vector<Streamline> reference;
    std::vector<Seed> seeds;
};

namespace detail {

/// Local description of one bundle at a point.
struct BundleSample {
    double outside = 0.0;  // distance outside the bundle surface, mm (0 inside)
    Vec3 mu1 = Vec3::UnitZ();
    Vec3 mu2 = Vec3::UnitY();
    double kappa = 30.0;
    double beta = 0.0;
};

inline Vec3 orthogonalize(const Vec3& mu2, const Vec3& mu1) {
    Vec3 v = mu2 - mu2.dot(mu1) * mu1;
    if (v.norm() < 1e-9) v = tangent_frame(mu1).first;
    return v.normalized();
}

/// Polyline resampled at a fixed arc-length step, starting at its first vertex.
inline std::vector<Vec3> resample(const std::vector<Vec3>& pts, double step) {
    std::vector<Vec3> out;
    if (pts.empty()) return out;
    out.push_back(pts.front());
    double carry = 0.0;  // arc length travelled since the last output point
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const Vec3 a = pts[i - 1], b = pts[i];
        const double len = (b - a).norm();
        double pos = step - carry;
        while (pos <= len + 1e-12) {
            out.push_back(a + (pos / len) * (b - a));
            pos += step;
        }
        carry = len - (pos - step);
    }
    return out;
}

class Bundle {
public:
    virtual ~Bundle() = default;
    virtual BundleSample sample(const Vec3& p) const = 0;
    virtual std::vector<Streamline> reference() const = 0;
};

/// Straight tube of radius r between two points.
class TubeBundle final : public Bundle {
public:
    TubeBundle(Vec3 a, Vec3 b, double r, double kappa, double beta, double ref_spacing)
        : a_(a), b_(b), r_(r), kappa_(kappa), beta_(beta), ref_spacing_(ref_spacing) {
        axis_ = (b - a).normalized();
        len_ = (b - a).norm();
        mu2_ = orthogonalize(Vec3::UnitY(), axis_);
    }

    BundleSample sample(const Vec3& p) const override {
        const double t = (p - a_).dot(axis_);
        const double radial = (p - a_ - t * axis_).norm();
        const double over_r = std::max(0.0, radial - r_);
        const double over_t = std::max({0.0, -t, t - len_});
        return {std::hypot(over_r, over_t), axis_, mu2_, kappa_, beta_};
    }

    std::vector<Streamline> reference() const override {
        std::vector<Streamline> out;
        const Vec3 u = mu2_, w = axis_.cross(mu2_);
        for (const Vec3& off : disc_lattice(r_, ref_spacing_, u, w))
            out.push_back({resample({a_ + off, b_ + off}, 0.5), Termination::none});
        return out;
    }

    /// Offsets of a square lattice (centered on 0) inside a disc.
    static std::vector<Vec3> disc_lattice(double r, double h, const Vec3& u, const Vec3& w) {
        std::vector<Vec3> out;
        const int n = static_cast<int>(std::floor(r / h + 1e-9));
        for (int i = -n; i <= n; ++i)
            for (int j = -n; j <= n; ++j)
                if (std::hypot(i * h, j * h) <= r + 1e-9) out.push_back(i * h * u + j * h * w);
        return out;
    }

private:
    Vec3 a_, b_, axis_, mu2_;
    double len_, r_, kappa_, beta_, ref_spacing_;
};

/// Quarter circle of radius R in the x-z plane around c, from c + R e_x
/// (heading +z) to c + R e_z (heading -x); tube radius r.
class ArcBundle final : public Bundle {
public:
    ArcBundle(Vec3 c, double big_r, double r, double kappa, double beta, double ref_spacing)
        : c_(c), big_r_(big_r), r_(r), kappa_(kappa), beta_(beta), ref_spacing_(ref_spacing) {}

    BundleSample sample(const Vec3& p) const override {
        const Vec3 d = p - c_;
        const double phi = std::atan2(d.z(), d.x());
        const double phic = std::clamp(phi, 0.0, std::numbers::pi / 2.0);
        const Vec3 center = c_ + big_r_ * Vec3(std::cos(phic), 0.0, std::sin(phic));
        const Vec3 tangent(-std::sin(phic), 0.0, std::cos(phic));
        const Vec3 rel = p - center;
        const double along = rel.dot(tangent);
        const double radial = (rel - along * tangent).norm();
        const double over_r = std::max(0.0, radial - r_);
        const double over_t = (phi == phic) ? 0.0 : std::abs(along);
        return {std::hypot(over_r, over_t), tangent, Vec3::UnitY(), kappa_, beta_};
    }

    std::vector<Streamline> reference() const override {
        std::vector<Streamline> out;
        for (const Vec3& off : TubeBundle::disc_lattice(r_, ref_spacing_, Vec3::UnitX(), Vec3::UnitY())) {
            // offset (radial, y) kept constant along the arc
            const double rr = big_r_ + off.x();
            std::vector<Vec3> pts;
            const int n = 2000;
            for (int k = 0; k <= n; ++k) {
                const double phi = (std::numbers::pi / 2.0) * k / n;
                pts.push_back(c_ + Vec3(rr * std::cos(phi), off.y(), rr * std::sin(phi)));
            }
            out.push_back({resample(pts, 0.5), Termination::none});
        }
        return out;
    }

private:
    Vec3 c_;
    double big_r_, r_, kappa_, beta_, ref_spacing_;
};

/// Stem of radius r along +z from z0 to zj, then a wedge up to z1 whose
/// elliptical cross-section grows with half-angles theta2 (along y, the
/// direction of the extra fanning mu2) and theta3 (along x). Fibers run on
/// straight rays from virtual apexes at distance d = r / tan(theta) below zj.
///
/// Fanning per voxel: a voxel of width w at distance rho from an apex sees ray
/// directions spread uniformly over an angle min(2 theta, w / rho), i.e. with
/// variance s^2 = min(2 theta, w / rho)^2 / 12. Adding that to the intrinsic
/// axial variance 1/(2 kappa) gives V = 1/(2 kappa) + s^2 per tangent axis.
/// With kappa held fixed the Bingham variances are 1/(2 kappa) across mu3 and
/// 1/(2 (kappa - beta)) across mu2, so matching their ratio gives
///     beta = kappa (1 - V3 / V2),   clamped to [0, kappa - 2].
class FanBundle final : public Bundle {
public:
    FanBundle(Vec3 axis_point, double z0, double zj, double z1, double r, double theta2, double theta3, double kappa,
              double stem_beta, double window, double ref_spacing)
        : o_(axis_point), z0_(z0), zj_(zj), z1_(z1), r_(r), t2_(theta2), t3_(theta3), kappa_(kappa),
          stem_beta_(stem_beta), window_(window), ref_spacing_(ref_spacing) {}

    double apex_y() const { return t2_ > 0.0 ? r_ / std::tan(t2_) : std::numeric_limits<double>::infinity(); }
    double apex_x() const { return t3_ > 0.0 ? r_ / std::tan(t3_) : std::numeric_limits<double>::infinity(); }

    /// Ray direction through the point at lateral offset (x, y) and height dz above the junction.
    Vec3 ray_direction(double x, double y, double dz) const {
        const double gx = std::isinf(apex_x()) ? 0.0 : x / (dz + apex_x());
        const double gy = std::isinf(apex_y()) ? 0.0 : y / (dz + apex_y());
        return Vec3(gx, gy, 1.0).normalized();
    }

    BundleSample sample(const Vec3& p) const override {
        const Vec3 d = p - o_;
        const double dz = std::max(0.0, d.z() - zj_);
        const double ax = r_ + dz * std::tan(t3_);
        const double ay = r_ + dz * std::tan(t2_);
        const double rho = std::hypot(d.x() / ax, d.y() / ay);
        const double lateral = std::hypot(d.x(), d.y());
        const double over_r = rho > 1.0 ? lateral * (1.0 - 1.0 / rho) : 0.0;
        const double over_t = std::max({0.0, z0_ - d.z(), d.z() - z1_});
        BundleSample s;
        s.outside = std::hypot(over_r, over_t);
        s.kappa = kappa_;
        if (d.z() <= zj_) {
            s.mu1 = Vec3::UnitZ();
            s.beta = stem_beta_;
        } else {
            // clamp to the wedge so the direction field stays that of the nearest ray
            const double scale = rho > 1.0 ? 1.0 / rho : 1.0;
            s.mu1 = ray_direction(d.x() * scale, d.y() * scale, dz);
            const double v0 = 1.0 / (2.0 * kappa_);
            const double s2 = spread(t2_, dz + apex_y()), s3 = spread(t3_, dz + apex_x());
            const double v2 = v0 + s2 * s2, v3 = v0 + s3 * s3;
            s.beta = std::clamp(kappa_ * (1.0 - v3 / v2), 0.0, kappa_ - kBetaGap);
            s.beta = std::max(s.beta, std::min(stem_beta_, kappa_ - kBetaGap));
        }
        s.mu2 = orthogonalize(Vec3::UnitY(), s.mu1);
        return s;
    }

    std::vector<Streamline> reference() const override {
        std::vector<Streamline> out;
        for (const Vec3& off : TubeBundle::disc_lattice(r_, ref_spacing_, Vec3::UnitX(), Vec3::UnitY())) {
            const Vec3 start = o_ + Vec3(off.x(), off.y(), z0_);
            const Vec3 junction = o_ + Vec3(off.x(), off.y(), zj_);
            const Vec3 dir = ray_direction(off.x(), off.y(), 0.0);
            const Vec3 end = junction + ((z1_ - zj_) / dir.z()) * dir;
            out.push_back({resample({start, junction, end}, 0.5), Termination::none});
        }
        return out;
    }

private:
    double spread(double theta, double rho) const {
        if (!(theta > 0.0)) return 0.0;
        return std::min(2.0 * theta, window_ / rho) / std::sqrt(12.0);
    }

    Vec3 o_;
    double z0_, zj_, z1_, r_, t2_, t3_, kappa_, stem_beta_, window_, ref_spacing_;
};

inline std::vector<std::unique_ptr<Bundle>> make_bundles(const PhantomSpec& s) {
    const Vec3 lo = s.margin_mm * Vec3::Ones();
    Vec3 hi;
    for (int a = 0; a < 3; ++a) hi[a] = s.spacing[a] * (s.dims[static_cast<std::size_t>(a)] - 1) - s.margin_mm;
    const Vec3 c = 0.5 * (lo + hi);
    std::vector<std::unique_ptr<Bundle>> b;
    switch (s.shape) {
        case PhantomShape::straight:
            b.push_back(std::make_unique<TubeBundle>(Vec3(c.x(), c.y(), lo.z()), Vec3(c.x(), c.y(), hi.z()),
                                                     s.radius_mm, s.kappa, s.beta, s.ref_spacing_mm));
            break;
        case PhantomShape::crossing: {
            const double a = s.crossing_angle_deg * std::numbers::pi / 180.0;
            const Vec3 d1 = Vec3::UnitZ(), d2(std::sin(a), 0.0, std::cos(a));
            for (const Vec3& d : {d1, d2}) {
                double t = std::numeric_limits<double>::infinity();
                for (int k = 0; k < 3; ++k)
                    if (std::abs(d[k]) > 1e-12) t = std::min(t, (hi[k] - c[k]) / std::abs(d[k]));
                b.push_back(std::make_unique<TubeBundle>(c - t * d, c + t * d, s.radius_mm, s.kappa, s.beta,
                                                         s.ref_spacing_mm));
            }
            break;
        }
        case PhantomShape::arc:
            b.push_back(std::make_unique<ArcBundle>(Vec3(lo.x() + s.radius_mm, c.y(), lo.z()), s.arc_radius_mm,
                                                    s.radius_mm, s.kappa, s.beta, s.ref_spacing_mm));
            break;
        case PhantomShape::fan: {
            const double zj = lo.z() + s.fan_start_frac * (hi.z() - lo.z());
            // shorten the wedge so its widest cross-section stays inside the margins
            double z1 = hi.z();
            const double t2 = std::tan(s.fan_half_angle_mu2_deg * std::numbers::pi / 180.0);
            const double t3 = std::tan(s.fan_half_angle_mu3_deg * std::numbers::pi / 180.0);
            if (t2 > 0.0) z1 = std::min(z1, zj + (hi.y() - c.y() - s.radius_mm) / t2);
            if (t3 > 0.0) z1 = std::min(z1, zj + (hi.x() - c.x() - s.radius_mm) / t3);
            if (!(z1 > zj)) throw ConfigError("fan wedge does not fit inside the volume");
            b.push_back(std::make_unique<FanBundle>(Vec3(c.x(), c.y(), 0.0), lo.z(), zj, z1, s.radius_mm,
                                                    s.fan_half_angle_mu2_deg * std::numbers::pi / 180.0,
                                                    s.fan_half_angle_mu3_deg * std::numbers::pi / 180.0, s.kappa,
                                                    s.beta, s.fan_window_mm > 0.0 ? s.fan_window_mm : s.spacing.maxCoeff(),
                                                    s.ref_spacing_mm));
            break;
        }
    }
    return b;
}

/// Seed plane: perpendicular to the reference streamlines' common start
/// direction at the given fraction of the first reference streamline.
inline std::pair<Vec3, Vec3> seed_plane(const std::vector<Streamline>& ref, double frac) {
    const auto& pts = ref.front().points;
    const std::size_t k = std::min(pts.size() - 2, static_cast<std::size_t>(frac * static_cast<double>(pts.size() - 1)));
    return {pts[k] + 0.25 * (pts[k + 1] - pts[k]), (pts[k + 1] - pts[k]).normalized()};
}

}  // namespace detail

/// Samples the phantom on its grid. Values are rounded to single precision so
/// the in-memory field equals the field read back from its file.
inline Phantom gen_phantom(const PhantomSpec& spec, const ConvLut& lut) {
    spec.validate();
    const auto bundles = detail::make_bundles(spec);
    Phantom ph;
    ph.field = FodfField(spec.dims, spec.spacing, Vec3::Zero(), true);
    const double falloff = 2.0 * spec.spacing.maxCoeff();
    std::mt19937_64 rng(spec.rng_seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::uint32_t k = 0; k < spec.dims[2]; ++k)
        for (std::uint32_t j = 0; j < spec.dims[1]; ++j)
            for (std::uint32_t i = 0; i < spec.dims[0]; ++i) {
                const Vec3 p = ph.field.position(i, j, k);
                const std::size_t idx = ph.field.index(i, j, k);
                SymTensor6 t;
                double wm = 0.0;
                int members = 0;
                for (const auto& b : bundles) {
                    const auto s = b->sample(p);
                    const double m = std::clamp(1.0 - s.outside / falloff, 0.0, 1.0);
                    if (m <= 0.0) continue;
                    ++members;
                    BinghamCompartment c{m, quat_from_frame(s.mu1, s.mu2), s.kappa, s.beta};
                    t += conv_response(c, lut);
                    wm = std::max(wm, m);
                }
                if (members > 3) throw ConfigError("more than three bundles overlap in one voxel");
                if (members > 0 && spec.noise_sigma > 0.0)
                    for (std::size_t q = 0; q < kNumCoeffs; ++q) t[q] += spec.noise_sigma * noise(rng);
                ph.field.voxels[idx] = t;
                ph.field.wm[idx] = wm;
            }
    quantize(ph.field);
    for (const auto& b : bundles) {
        auto r = b->reference();
        ph.reference.insert(ph.reference.end(), r.begin(), r.end());
    }
    const auto [point, normal] = detail::seed_plane(ph.reference, spec.seed_plane_frac);
    ph.seeds = seeds_from_reference(ph.reference, point, normal);
    return ph;
}

}  // namespace fanfilter
