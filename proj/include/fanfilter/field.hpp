#pragma once

// Regular grid of fODF tensors with white-matter density; trilinear sampling
// and the FOF1 binary format.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fanfilter/binary_io.hpp"
#include "fanfilter/error.hpp"
#include "fanfilter/tensor.hpp"

namespace fanfilter {

inline constexpr std::uint32_t kFofVersion = 1;
inline constexpr char kFofMagic[6] = {'F', 'O', 'F', '1', '\0', '\0'};

struct FodfField {
    std::array<std::uint32_t, 3> dims{1, 1, 1};
    Vec3 spacing = Vec3::Ones();
    Vec3 origin = Vec3::Zero();
    std::vector<SymTensor6> voxels;
    std::vector<double> wm;  // empty when the field carries no density

    FodfField() = default;
    FodfField(std::array<std::uint32_t, 3> d, const Vec3& sp, const Vec3& org, bool with_wm = true)
        : dims(d), spacing(sp), origin(org) {
        validate_geometry();
        voxels.resize(size());
        if (with_wm) wm.assign(size(), 0.0);
    }

    std::size_t size() const { return std::size_t{dims[0]} * dims[1] * dims[2]; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return i + dims[0] * (j + dims[1] * k); }
    bool has_wm() const { return !wm.empty(); }

    Vec3 position(std::size_t i, std::size_t j, std::size_t k) const {
        return origin + Vec3(spacing.x() * static_cast<double>(i), spacing.y() * static_cast<double>(j),
                             spacing.z() * static_cast<double>(k));
    }
    /// Continuous voxel coordinates of a point in mm.
    Vec3 to_voxel(const Vec3& p) const { return (p - origin).cwiseQuotient(spacing); }
    /// Interpolation domain: the box spanned by the voxel centers.
    bool inside(const Vec3& p) const {
        const Vec3 v = to_voxel(p);
        for (int a = 0; a < 3; ++a)
            if (!(v[a] >= 0.0 && v[a] <= static_cast<double>(dims[static_cast<std::size_t>(a)] - 1))) return false;
        return true;
    }

    void validate_geometry() const {
        for (int a = 0; a < 3; ++a) {
            if (dims[static_cast<std::size_t>(a)] == 0) throw ContractViolation("FodfField: zero dimension");
            if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) throw ContractViolation("FodfField: spacing must be positive");
            if (!std::isfinite(origin[a])) throw ContractViolation("FodfField: origin not finite");
        }
    }
};

struct FodfSample {
    SymTensor6 t;
    double wm = 1.0;
};

/// Trilinear interpolation of the tensor coefficients and the density;
/// empty outside the grid (the caller treats that as a bounds exit).
inline std::optional<FodfSample> interp_fodf(const FodfField& f, const Vec3& p) {
    if (!f.inside(p)) return std::nullopt;
    const Vec3 v = f.to_voxel(p);
    std::array<std::size_t, 3> i0{};
    std::array<double, 3> w{};
    for (std::size_t a = 0; a < 3; ++a) {
        const double fl = std::floor(v[static_cast<int>(a)]);
        i0[a] = static_cast<std::size_t>(fl);
        w[a] = v[static_cast<int>(a)] - fl;
        if (i0[a] + 1 >= f.dims[a]) {  // on the upper face
            i0[a] = f.dims[a] - 1;
            w[a] = 0.0;
        }
    }
    FodfSample s;
    s.wm = 0.0;
    for (int c = 0; c < 8; ++c) {
        const std::array<std::size_t, 3> d{static_cast<std::size_t>(c & 1), static_cast<std::size_t>((c >> 1) & 1),
                                           static_cast<std::size_t>((c >> 2) & 1)};
        double wt = 1.0;
        for (std::size_t a = 0; a < 3; ++a) wt *= d[a] ? w[a] : 1.0 - w[a];
        if (wt == 0.0) continue;
        const std::size_t idx = f.index(i0[0] + d[0], i0[1] + d[1], i0[2] + d[2]);
        s.t.add_scaled(wt, f.voxels[idx]);
        s.wm += wt * (f.has_wm() ? f.wm[idx] : 1.0);
    }
    return s;
}

inline std::vector<unsigned char> encode(const FodfField& f) {
    binary::Writer w;
    w.put_bytes(std::string_view(kFofMagic, sizeof(kFofMagic)));
    w.put<std::uint32_t>(kFofVersion);
    for (auto d : f.dims) w.put<std::uint32_t>(d);
    for (int a = 0; a < 3; ++a) w.put<double>(f.spacing[a]);
    for (int a = 0; a < 3; ++a) w.put<double>(f.origin[a]);
    w.put<std::uint8_t>(f.has_wm() ? 1 : 0);
    for (const auto& t : f.voxels)
        for (std::size_t k = 0; k < kNumCoeffs; ++k) w.put<float>(static_cast<float>(t[k]));
    if (f.has_wm())
        for (double v : f.wm) w.put<float>(static_cast<float>(v));
    return w.bytes();
}

inline FodfField decode_fodf_field(std::vector<unsigned char> bytes) {
    binary::Reader r(std::move(bytes));
    r.expect_bytes(std::string_view(kFofMagic, sizeof(kFofMagic)), "fODF field");
    const auto vat = r.offset();
    const auto version = r.get<std::uint32_t>("version");
    if (version != kFofVersion) throw FormatError("unsupported fODF field version " + std::to_string(version), vat);
    FodfField f;
    const auto dat = r.offset();
    for (auto& d : f.dims) d = r.get<std::uint32_t>("dims");
    for (int a = 0; a < 3; ++a) f.spacing[a] = r.get<double>("spacing");
    for (int a = 0; a < 3; ++a) f.origin[a] = r.get<double>("origin");
    try {
        f.validate_geometry();
    } catch (const ContractViolation& e) {
        throw FormatError(e.what(), dat);
    }
    const auto wat = r.offset();
    const auto has_wm = r.get<std::uint8_t>("has_wm flag");
    if (has_wm > 1) throw FormatError("has_wm flag must be 0 or 1", wat);
    const std::size_t n = f.size();
    const std::size_t need = n * kNumCoeffs * sizeof(float) + (has_wm ? n * sizeof(float) : 0);
    if (r.remaining() != need)
        throw FormatError("fODF payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                              std::to_string(need),
                          r.offset());
    f.voxels.resize(n);
    for (auto& t : f.voxels)
        for (std::size_t k = 0; k < kNumCoeffs; ++k) t[k] = static_cast<double>(r.get<float>("voxel"));
    if (has_wm) {
        f.wm.resize(n);
        for (auto& v : f.wm) {
            const auto at = r.offset();
            v = static_cast<double>(r.get<float>("density"));
            if (!(v >= 0.0 && v <= 1.0)) throw FormatError("white matter density outside [0, 1]", at);
        }
    }
    return f;
}

inline void write_fodf_field(const std::string& path, const FodfField& f) { binary::write_file(path, encode(f)); }

inline FodfField read_fodf_field(const std::string& path) { return decode_fodf_field(binary::read_file(path)); }

/// Rounds every stored value to the file's single precision, so that an
/// in-memory field behaves exactly like the same field after a file round trip.
inline void quantize(FodfField& f) {
    for (auto& t : f.voxels)
        for (std::size_t k = 0; k < kNumCoeffs; ++k) t[k] = static_cast<double>(static_cast<float>(t[k]));
    for (auto& v : f.wm) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace fanfilter
