#pragma once

// Bundle comparison: quantile directed Hausdorff distance, density and ROI filters.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "fanfilter/error.hpp"
#include "fanfilter/field.hpp"
#include "fanfilter/streamline.hpp"

namespace fanfilter {

namespace detail {

inline std::vector<Vec3> pool_points(const std::vector<Streamline>& s) {
    std::vector<Vec3> out;
    for (const auto& sl : s) out.insert(out.end(), sl.points.begin(), sl.points.end());
    return out;
}

/// Uniform bucket grid over a point set for exact nearest-neighbour queries.
class PointGrid {
public:
    explicit PointGrid(const std::vector<Vec3>& pts) : pts_(pts) {
        lo_ = hi_ = pts.front();
        for (const auto& p : pts) {
            lo_ = lo_.cwiseMin(p);
            hi_ = hi_.cwiseMax(p);
        }
        const Vec3 ext = hi_ - lo_;
        const double vol_cell = std::max(ext.prod(), 1e-300) / static_cast<double>(pts.size());
        h_ = std::max({std::cbrt(vol_cell) * 2.0, ext.maxCoeff() / 256.0, 1e-9});
        for (int a = 0; a < 3; ++a) n_[a] = std::min(256, static_cast<int>(ext[a] / h_) + 1);
        start_.assign(static_cast<std::size_t>(n_[0] * n_[1] * n_[2]) + 1, 0);
        std::vector<std::uint32_t> cell(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto c = cell_of(pts[i]);
            cell[i] = static_cast<std::uint32_t>(flat(c));
            ++start_[cell[i] + 1];
        }
        for (std::size_t i = 1; i < start_.size(); ++i) start_[i] += start_[i - 1];
        order_.resize(pts.size());
        auto fill = start_;
        for (std::size_t i = 0; i < pts.size(); ++i) order_[fill[cell[i]]++] = static_cast<std::uint32_t>(i);
    }

    /// Squared distance to the nearest point; bitwise equal to a full scan.
    double nearest_sq(const Vec3& q) const {
        const auto c = cell_of(q);
        double best = std::numeric_limits<double>::infinity();
        const int rmax = std::max({n_[0], n_[1], n_[2]});
        for (int r = 0; r <= rmax; ++r) {
            if (r > 0) {
                // every point of ring r lies at least (r - 1) cells from q's (projected) cell
                const double bound = (r - 1) * h_ * (1.0 - 1e-12);
                if (bound > 0.0 && bound * bound > best) break;
            }
            visit_ring(c, r, q, best);
        }
        return best;
    }

private:
    std::array<int, 3> cell_of(const Vec3& p) const {
        std::array<int, 3> c{};
        for (int a = 0; a < 3; ++a)
            c[a] = std::clamp(static_cast<int>(std::floor((p[a] - lo_[a]) / h_)), 0, n_[a] - 1);
        return c;
    }
    int flat(const std::array<int, 3>& c) const { return c[0] + n_[0] * (c[1] + n_[1] * c[2]); }

    void visit_ring(const std::array<int, 3>& c, int r, const Vec3& q, double& best) const {
        for (int k = c[2] - r; k <= c[2] + r; ++k) {
            if (k < 0 || k >= n_[2]) continue;
            for (int j = c[1] - r; j <= c[1] + r; ++j) {
                if (j < 0 || j >= n_[1]) continue;
                const bool face = std::abs(k - c[2]) == r || std::abs(j - c[1]) == r;
                for (int i = c[0] - r; i <= c[0] + r; i += (face || r == 0) ? 1 : 2 * r) {
                    if (i < 0 || i >= n_[0]) continue;
                    const int f = flat({i, j, k});
                    for (auto p = start_[f]; p < start_[f + 1]; ++p) {
                        const double d = (pts_[order_[p]] - q).squaredNorm();
                        if (d < best) best = d;
                    }
                }
            }
        }
    }

    const std::vector<Vec3>& pts_;
    Vec3 lo_, hi_;
    double h_ = 1.0;
    std::array<int, 3> n_{1, 1, 1};
    std::vector<std::uint32_t> start_, order_;
};

}  // namespace detail

/// 1-based nearest rank of the 95% quantile among n sorted values: ceil(0.95 n).
inline std::size_t q95_rank(std::size_t n) { return (95 * n + 99) / 100; }

/// 95% quantile over the vertices of A of the distance to the nearest vertex of B.
inline double directed_hausdorff_q95(const std::vector<Streamline>& a, const std::vector<Streamline>& b,
                                     unsigned threads = 1) {
    const auto pa = detail::pool_points(a), pb = detail::pool_points(b);
    if (pa.empty() || pb.empty()) throw MetricError("directed_hausdorff_q95: empty point set");
    const detail::PointGrid grid(pb);
    std::vector<double> d(pa.size());
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(pa.size())));
    auto work = [&](std::size_t t) {
        for (std::size_t i = t; i < pa.size(); i += threads) d[i] = grid.nearest_sq(pa[i]);
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    const std::size_t k = q95_rank(d.size()) - 1;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    return std::sqrt(d[k]);
}

struct VoxelGrid {
    std::array<std::uint32_t, 3> dims{1, 1, 1};
    Vec3 spacing = Vec3::Ones();
    Vec3 origin = Vec3::Zero();

    static VoxelGrid of(const FodfField& f) { return {f.dims, f.spacing, f.origin}; }

    /// Index of the voxel whose center is nearest, or -1 outside the volume.
    std::int64_t voxel(const Vec3& p) const {
        std::int64_t idx = 0, stride = 1;
        for (int a = 0; a < 3; ++a) {
            const double v = std::round((p[a] - origin[a]) / spacing[a]);
            const auto n = dims[static_cast<std::size_t>(a)];
            if (!(v >= 0.0 && v < static_cast<double>(n))) return -1;
            idx += static_cast<std::int64_t>(v) * stride;
            stride *= n;
        }
        return idx;
    }
};

struct DensityParams {
    int min_visits = 2;
    double max_low_frac = 0.3;
};

/// Drops streamlines that run mostly through voxels visited by fewer than
/// min_visits distinct streamlines. Points outside the volume count as low.
inline std::vector<Streamline> density_filter(const std::vector<Streamline>& s, const VoxelGrid& g,
                                              const DensityParams& p = {}) {
    if (p.min_visits < 1) throw ContractViolation("density_filter: min_visits must be >= 1");
    std::vector<std::vector<std::int64_t>> vox(s.size());
    std::vector<std::uint32_t> visits(std::size_t{g.dims[0]} * g.dims[1] * g.dims[2], 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (const auto& pt : s[i].points) vox[i].push_back(g.voxel(pt));
        auto u = vox[i];
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
        for (auto v : u)
            if (v >= 0) ++visits[static_cast<std::size_t>(v)];
    }
    std::vector<Streamline> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::size_t low = 0;
        for (auto v : vox[i])
            if (v < 0 || visits[static_cast<std::size_t>(v)] < static_cast<std::uint32_t>(p.min_visits)) ++low;
        if (static_cast<double>(low) <= p.max_low_frac * static_cast<double>(vox[i].size())) out.push_back(s[i]);
    }
    return out;
}

struct Region {
    enum class Kind { box, sphere } kind = Kind::box;
    Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();  // box corners
    Vec3 center = Vec3::Zero();
    double radius = 0.0;

    static Region box(const Vec3& lo, const Vec3& hi) { return {Kind::box, lo, hi, Vec3::Zero(), 0.0}; }
    static Region sphere(const Vec3& c, double r) { return {Kind::sphere, Vec3::Zero(), Vec3::Zero(), c, r}; }

    bool contains(const Vec3& p) const {
        if (kind == Kind::sphere) return (p - center).squaredNorm() <= radius * radius;
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
    bool hits(const Streamline& s) const {
        return std::any_of(s.points.begin(), s.points.end(), [&](const Vec3& p) { return contains(p); });
    }
};

struct RoiSet {
    std::vector<Region> include, exclude;
    bool empty() const { return include.empty() && exclude.empty(); }
};

inline std::vector<Streamline> roi_filter(const std::vector<Streamline>& s, const RoiSet& rois) {
    std::vector<Streamline> out;
    for (const auto& sl : s) {
        const bool keep =
            std::all_of(rois.include.begin(), rois.include.end(), [&](const Region& r) { return r.hits(sl); }) &&
            std::none_of(rois.exclude.begin(), rois.exclude.end(), [&](const Region& r) { return r.hits(sl); });
        if (keep) out.push_back(sl);
    }
    return out;
}

}  // namespace fanfilter
