#pragma once

// Lookup tables on the triangular (kappa, beta) grid
//   kappa in {2.1, 2.2, ..., 89.0},  beta in {0, 0.1, ..., kappa - 2}:
//   ConvLut  - canonical unit-fraction convolved responses (moment tensors)
//   InitLut  - tangent Hessian eigenvalues of the alpha-normalized responses
// plus interpolation, inversion and the BLUT1 file format.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fanfilter/bingham.hpp"
#include "fanfilter/binary_io.hpp"
#include "fanfilter/error.hpp"
#include "fanfilter/lowrank.hpp"
#include "fanfilter/quadrature.hpp"
#include "fanfilter/tensor.hpp"

namespace fanfilter {

inline constexpr std::uint32_t kLutVersion = 1;
inline constexpr char kLutMagic[6] = {'B', 'L', 'U', 'T', '1', '\0'};

class LutGrid {
public:
    LutGrid() : LutGrid(kKappaMin, 0.1, 870, 0.1) {}
    LutGrid(double kappa_start, double kappa_step, std::uint32_t kappa_count, double beta_step)
        : kappa_start_(kappa_start), kappa_step_(kappa_step), kappa_count_(kappa_count), beta_step_(beta_step) {
        if (!(kappa_step > 0.0) || !(beta_step > 0.0) || kappa_count < 2 || !(kappa_start >= kBetaGap))
            throw ContractViolation("LutGrid: invalid grid parameters");
        offsets_.resize(kappa_count_ + 1);
        offsets_[0] = 0;
        for (std::uint32_t i = 0; i < kappa_count_; ++i) offsets_[i + 1] = offsets_[i] + row_count(i);
    }

    double kappa_start() const { return kappa_start_; }
    double kappa_step() const { return kappa_step_; }
    std::uint32_t kappa_count() const { return kappa_count_; }
    double beta_step() const { return beta_step_; }

    double kappa_at(std::size_t i) const { return grid_value(kappa_start_, kappa_step_, i); }
    double beta_at(std::size_t m) const { return grid_value(0.0, beta_step_, m); }
    /// Number of beta nodes in row i: beta in {0, step, ..., kappa_i - 2}.
    std::size_t row_count(std::size_t i) const {
        return static_cast<std::size_t>(std::floor((kappa_at(i) - kBetaGap) / beta_step_ + 1e-6)) + 1;
    }
    std::size_t node_count() const { return offsets_.back(); }
    std::size_t index(std::size_t i, std::size_t m) const { return offsets_[i] + m; }
    std::size_t max_row_count() const { return row_count(kappa_count_ - 1); }

    friend bool operator==(const LutGrid& a, const LutGrid& b) {
        return a.kappa_start_ == b.kappa_start_ && a.kappa_step_ == b.kappa_step_ &&
               a.kappa_count_ == b.kappa_count_ && a.beta_step_ == b.beta_step_;
    }

private:
    // start + k * step; for decimal steps such as 0.1 the node is computed as
    // an integer ratio so that it is the double closest to the decimal value.
    static double grid_value(double start, double step, std::size_t k) {
        const double inv = std::round(1.0 / step);
        const double s = std::round(start * inv);
        if (inv >= 1.0 && std::abs(1.0 / step - inv) < 1e-9 && std::abs(start * inv - s) < 1e-9)
            return (s + static_cast<double>(k)) / inv;
        return start + static_cast<double>(k) * step;
    }

    double kappa_start_, kappa_step_;
    std::uint32_t kappa_count_;
    double beta_step_;
    std::vector<std::size_t> offsets_;
};

struct ConvLut {
    LutGrid grid;
    std::uint32_t quadrature_order = OctantRule::kGaussOrder;
    std::vector<SymTensor6> nodes;
};

struct InitIndex;

struct InitLut {
    LutGrid grid;
    std::uint32_t quadrature_order = OctantRule::kGaussOrder;
    std::vector<std::array<double, 2>> nodes;  // (lambda1, lambda2)
    std::shared_ptr<const InitIndex> index;  // search structure for init_from_eigs
};

namespace detail {

struct GridPos {
    std::size_t i0 = 0;
    double f = 0.0;  // weight of row i0 + 1
    double kappa = 0.0;
    double beta = 0.0;
    bool clamped = false;
};

inline double snap(double x) {
    const double r = std::round(x);
    return std::abs(x - r) < 1e-9 ? r : x;
}

/// Resolves (kappa, beta) to grid coordinates. Queries within one grid step
/// outside the domain (including the cut corner beta > kappa - 2) are clamped
/// and flagged; anything further out is a range error.
inline GridPos locate(const LutGrid& g, double kappa, double beta) {
    if (!std::isfinite(kappa) || !std::isfinite(beta)) throw RangeError("lookup table query is not finite");
    GridPos p;
    const double last = static_cast<double>(g.kappa_count() - 1);
    double fi = snap((kappa - g.kappa_start()) / g.kappa_step());
    if (fi < 0.0) {
        if (fi < -1.0 - 1e-9) throw RangeError("kappa below lookup table range");
        fi = 0.0;
        p.clamped = true;
    } else if (fi > last) {
        if (fi > last + 1.0 + 1e-9) throw RangeError("kappa above lookup table range");
        fi = last;
        p.clamped = true;
    }
    p.i0 = static_cast<std::size_t>(std::floor(fi));
    p.f = fi - static_cast<double>(p.i0);
    if (p.i0 >= g.kappa_count() - 1) {
        p.i0 = g.kappa_count() - 1;
        p.f = 0.0;
    }
    p.kappa = g.kappa_at(p.i0) + p.f * g.kappa_step();

    const double bmax = p.kappa - kBetaGap;
    p.beta = beta;
    if (beta < 0.0) {
        if (beta < -g.beta_step() - 1e-9) throw RangeError("beta below lookup table range");
        p.beta = 0.0;
        p.clamped = true;
    } else if (beta > bmax + 1e-12) {
        if (beta > bmax + g.beta_step() + 1e-9) throw RangeError("beta beyond kappa - 2");
        p.beta = bmax;
        p.clamped = true;
    }
    return p;
}

/// Linear interpolation within row i at beta; beyond the row end the last node is used.
template <class Node, class Lerp>
Node row_value(const LutGrid& g, const std::vector<Node>& nodes, std::size_t i, double beta, Lerp lerp) {
    const std::size_t n = g.row_count(i);
    double fm = snap(beta / g.beta_step());
    if (fm < 0.0) fm = 0.0;
    std::size_t m0 = static_cast<std::size_t>(std::floor(fm));
    double w = fm - static_cast<double>(m0);
    if (m0 >= n - 1) return nodes[g.index(i, n - 1)];
    if (w == 0.0) return nodes[g.index(i, m0)];
    return lerp(nodes[g.index(i, m0)], nodes[g.index(i, m0 + 1)], w);
}

template <class Node, class Lerp>
Node grid_interp(const LutGrid& g, const std::vector<Node>& nodes, const GridPos& p, Lerp lerp) {
    const Node lo = row_value(g, nodes, p.i0, p.beta, lerp);
    if (p.f == 0.0) return lo;
    return lerp(lo, row_value(g, nodes, p.i0 + 1, p.beta, lerp), p.f);
}

inline SymTensor6 lerp_tensor(const SymTensor6& a, const SymTensor6& b, double w) {
    SymTensor6 r;
    for (std::size_t k = 0; k < kNumCoeffs; ++k) r[k] = a[k] + w * (b[k] - a[k]);
    return r;
}

inline std::array<double, 2> lerp_pair(const std::array<double, 2>& a, const std::array<double, 2>& b, double w) {
    return {a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])};
}

}  // namespace detail

/// Canonical response at (kappa, beta) by bilinear interpolation on the triangular grid.
inline SymTensor6 conv_lookup(const ConvLut& lut, double kappa, double beta, bool* clamped = nullptr) {
    const auto p = detail::locate(lut.grid, kappa, beta);
    if (clamped) *clamped = p.clamped;
    return detail::grid_interp(lut.grid, lut.nodes, p, detail::lerp_tensor);
}

inline std::array<double, 2> init_lookup(const InitLut& lut, double kappa, double beta, bool* clamped = nullptr) {
    const auto p = detail::locate(lut.grid, kappa, beta);
    if (clamped) *clamped = p.clamped;
    return detail::grid_interp(lut.grid, lut.nodes, p, detail::lerp_pair);
}

/// alpha * (canonical response at (kappa, beta)) rotated into the frame of q.
inline SymTensor6 conv_response(const BinghamCompartment& c, const ConvLut& lut, bool* clamped = nullptr) {
    validate(c);
    const SymTensor6 canonical = conv_lookup(lut, c.kappa, c.beta, clamped);
    if (c.q.vec().isZero(0.0)) return c.alpha * canonical;  // keeps node values exact
    const Rotation3 rot = rotation_unchecked(c.q.normalized().toRotationMatrix());
    return c.alpha * rotate_tensor(canonical, rot);
}

/// Evaluates the moment tensors on every grid node. Nodes sharing a beta value
/// share the azimuthal quadrature sums; every node equals
/// moment6_canonical(kappa_i, beta_m) bit for bit.
inline ConvLut build_conv_lut(const LutGrid& grid = LutGrid()) {
    ConvLut lut;
    lut.grid = grid;
    lut.nodes.resize(grid.node_count());
    std::vector<detail::AzimuthSums> az(grid.max_row_count());
    for (std::size_t m = 0; m < az.size(); ++m) az[m] = detail::azimuth_sums(grid.beta_at(m));
    for (std::size_t i = 0; i < grid.kappa_count(); ++i) {
        const auto polar = detail::polar_weights(grid.kappa_at(i));
        for (std::size_t m = 0; m < grid.row_count(i); ++m) {
            SymTensor6 t = detail::moments_from_parts(polar, az[m]);
            for (std::size_t k = 0; k < kNumCoeffs; ++k)
                if (!std::isfinite(t[k]))
                    throw Error("build_conv_lut: quadrature failure at kappa=" + std::to_string(grid.kappa_at(i)) +
                                " beta=" + std::to_string(grid.beta_at(m)));
            lut.nodes[grid.index(i, m)] = t;
        }
    }
    return lut;
}

/// Hessian eigenvalues of a canonical response after normalizing it by its
/// rank-1 fraction (its value at e_z), matching residual_fodf in the tracker.
inline std::array<double, 2> response_eigenvalues(const SymTensor6& canonical) {
    const double alpha = canonical.at(0, 0, kOrder);
    if (!(alpha > 0.0)) throw Error("response_eigenvalues: non-positive response at e_z");
    const TangentHessian h = tangent_hessian((1.0 / alpha) * canonical, Vec3::UnitZ());
    return {h.lambda1, h.lambda2};
}

struct KappaBeta {
    double kappa = kKappaMin;
    double beta = 0.0;
    bool flagged = false;  // query outside the table's image; result clamped to its boundary
};

namespace detail {

struct CellInverse {
    double u = 0.0, v = 0.0, residual = std::numeric_limits<double>::infinity();
};

/// Inverts the bilinear patch with corners a (0,0), b (1,0), c (0,1), d (1,1)
/// by Newton iteration.
inline CellInverse invert_bilinear(const std::array<double, 2>& a, const std::array<double, 2>& b,
                                   const std::array<double, 2>& c, const std::array<double, 2>& d,
                                   const std::array<double, 2>& target) {
    CellInverse r{0.5, 0.5};
    auto eval = [&](double u, double v, int k) {
        return (1 - u) * (1 - v) * a[k] + u * (1 - v) * b[k] + (1 - u) * v * c[k] + u * v * d[k];
    };
    for (int it = 0; it < 30; ++it) {
        const double f0 = eval(r.u, r.v, 0) - target[0];
        const double f1 = eval(r.u, r.v, 1) - target[1];
        const double j00 = (1 - r.v) * (b[0] - a[0]) + r.v * (d[0] - c[0]);
        const double j01 = (1 - r.u) * (c[0] - a[0]) + r.u * (d[0] - b[0]);
        const double j10 = (1 - r.v) * (b[1] - a[1]) + r.v * (d[1] - c[1]);
        const double j11 = (1 - r.u) * (c[1] - a[1]) + r.u * (d[1] - b[1]);
        const double det = j00 * j11 - j01 * j10;
        double du, dv;
        if (std::abs(det) > 1e-300 && std::isfinite(det)) {
            du = (j11 * f0 - j01 * f1) / det;
            dv = (-j10 * f0 + j00 * f1) / det;
        } else {
            // collapsed edge: least-squares step along the surviving direction
            const double gu = j00 * f0 + j10 * f1, gv = j01 * f0 + j11 * f1;
            const double nn = j00 * j00 + j01 * j01 + j10 * j10 + j11 * j11;
            if (!(nn > 0.0)) break;
            du = gu / nn;
            dv = gv / nn;
        }
        r.u -= du;
        r.v -= dv;
        if (!std::isfinite(r.u) || !std::isfinite(r.v)) {
            r.u = r.v = 0.5;
            break;
        }
        if (std::abs(du) + std::abs(dv) < 1e-15) break;
    }
    r.residual = std::hypot(eval(r.u, r.v, 0) - target[0], eval(r.u, r.v, 1) - target[1]);
    return r;
}

}  // namespace detail

/// Bucket grid over (lambda1, lambda2) listing the table cells whose bounding
/// box meets each bucket, plus the image of the domain boundary as a closed
/// polygon of nodes.
struct InitIndex {
    double lo1 = 0, hi1 = 0, lo2 = 0, hi2 = 0;
    int nb1 = 0, nb2 = 0;
    std::vector<std::uint32_t> start;                 // bucket -> offset into cells
    std::vector<std::array<std::uint32_t, 2>> cells;  // (kappa row, beta index) of the lower-left node
    std::vector<std::array<std::uint32_t, 2>> boundary;

    int bucket1(double l) const { return std::clamp(static_cast<int>((l - lo1) / (hi1 - lo1) * nb1), 0, nb1 - 1); }
    int bucket2(double l) const { return std::clamp(static_cast<int>((l - lo2) / (hi2 - lo2) * nb2), 0, nb2 - 1); }
};

namespace detail {

/// Corner value of a cell; beta indices past the row end use the last node,
/// consistent with grid_interp.
inline const std::array<double, 2>& init_node(const InitLut& lut, std::size_t i, std::size_t m) {
    const std::size_t n = lut.grid.row_count(i);
    return lut.nodes[lut.grid.index(i, std::min(m, n - 1))];
}

inline std::array<std::array<double, 2>, 4> cell_corners(const InitLut& lut, std::size_t i, std::size_t m) {
    return {init_node(lut, i, m), init_node(lut, i + 1, m), init_node(lut, i, m + 1), init_node(lut, i + 1, m + 1)};
}

}  // namespace detail

inline std::shared_ptr<const InitIndex> index_init_lut(const InitLut& lut) {
    const auto& g = lut.grid;
    auto idx = std::make_shared<InitIndex>();
    idx->lo1 = idx->lo2 = std::numeric_limits<double>::infinity();
    idx->hi1 = idx->hi2 = -std::numeric_limits<double>::infinity();
    for (const auto& n : lut.nodes) {
        idx->lo1 = std::min(idx->lo1, n[0]);
        idx->hi1 = std::max(idx->hi1, n[0]);
        idx->lo2 = std::min(idx->lo2, n[1]);
        idx->hi2 = std::max(idx->hi2, n[1]);
    }
    idx->hi1 += 1e-9 * (std::abs(idx->hi1) + 1.0);
    idx->hi2 += 1e-9 * (std::abs(idx->hi2) + 1.0);
    idx->nb1 = idx->nb2 = 256;

    struct Entry {
        std::uint32_t bucket, i, m;
    };
    std::vector<Entry> entries;
    for (std::size_t i = 0; i + 1 < g.kappa_count(); ++i)
        for (std::size_t m = 0; m + 1 < g.row_count(i + 1); ++m) {
            const auto c = detail::cell_corners(lut, i, m);
            double a1 = c[0][0], b1 = c[0][0], a2 = c[0][1], b2 = c[0][1];
            for (const auto& p : c) {
                a1 = std::min(a1, p[0]);
                b1 = std::max(b1, p[0]);
                a2 = std::min(a2, p[1]);
                b2 = std::max(b2, p[1]);
            }
            for (int u = idx->bucket1(a1); u <= idx->bucket1(b1); ++u)
                for (int v = idx->bucket2(a2); v <= idx->bucket2(b2); ++v)
                    entries.push_back({static_cast<std::uint32_t>(u * idx->nb2 + v), static_cast<std::uint32_t>(i),
                                       static_cast<std::uint32_t>(m)});
        }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.bucket < b.bucket; });
    idx->start.assign(static_cast<std::size_t>(idx->nb1 * idx->nb2) + 1, 0);
    for (const auto& e : entries) ++idx->start[e.bucket + 1];
    for (std::size_t k = 1; k < idx->start.size(); ++k) idx->start[k] += idx->start[k - 1];
    idx->cells.reserve(entries.size());
    for (const auto& e : entries) idx->cells.push_back({e.i, e.m});

    // boundary: beta = 0 row, last kappa column, diagonal back down, first kappa column
    const auto last = static_cast<std::uint32_t>(g.kappa_count() - 1);
    auto& bd = idx->boundary;
    for (std::uint32_t i = 0; i <= last; ++i) bd.push_back({i, 0});
    for (std::uint32_t m = 1; m < g.row_count(last); ++m) bd.push_back({last, m});
    for (std::uint32_t i = last; i-- > 0;) bd.push_back({i, static_cast<std::uint32_t>(g.row_count(i) - 1)});
    for (std::uint32_t m = static_cast<std::uint32_t>(g.row_count(0) - 1); m-- > 1;) bd.push_back({0, m});
    return idx;
}

inline InitLut build_init_lut(const ConvLut& conv) {
    InitLut lut;
    lut.grid = conv.grid;
    lut.quadrature_order = conv.quadrature_order;
    lut.nodes.resize(conv.nodes.size());
    for (std::size_t k = 0; k < conv.nodes.size(); ++k) lut.nodes[k] = response_eigenvalues(conv.nodes[k]);
    lut.index = index_init_lut(lut);
    return lut;
}

/// Inverse lookup (lambda1, lambda2) -> (kappa, beta) through the piecewise
/// bilinear map of the table. Queries outside its image are projected onto the
/// image of the domain boundary and flagged.
inline KappaBeta init_from_eigs(double l1, double l2, const InitLut& lut) {
    if (!(l1 >= l2) || !(l2 >= 0.0) || !std::isfinite(l1)) throw ContractViolation("init_from_eigs: need l1 >= l2 >= 0");
    const auto& g = lut.grid;
    std::shared_ptr<const InitIndex> own;
    if (!lut.index) own = index_init_lut(lut);
    const InitIndex& idx = lut.index ? *lut.index : *own;
    const std::array<double, 2> target{l1, l2};

    if (l1 >= idx.lo1 && l1 <= idx.hi1 && l2 >= idx.lo2 && l2 <= idx.hi2) {
        const int b = idx.bucket1(l1) * idx.nb2 + idx.bucket2(l2);
        constexpr double kInside = 1e-9;
        detail::CellInverse best;
        std::array<std::uint32_t, 2> best_cell{};
        for (std::uint32_t k = idx.start[static_cast<std::size_t>(b)]; k < idx.start[static_cast<std::size_t>(b) + 1]; ++k) {
            const auto [i, m] = idx.cells[k];
            const auto c = detail::cell_corners(lut, i, m);
            // exact node hit
            for (int q = 0; q < 4; ++q)
                if (c[static_cast<std::size_t>(q)] == target) {
                    const std::size_t ni = i + static_cast<std::size_t>(q & 1);
                    const std::size_t nm = std::min<std::size_t>(m + static_cast<std::size_t>(q >> 1), g.row_count(ni) - 1);
                    return {g.kappa_at(ni), g.beta_at(nm), false};
                }
            bool inside = true;
            for (int k2 = 0; k2 < 2; ++k2) {
                double lo = c[0][k2], hi = c[0][k2];
                for (const auto& p : c) {
                    lo = std::min(lo, p[k2]);
                    hi = std::max(hi, p[k2]);
                }
                const double tol = 1e-12 * (std::abs(hi) + 1.0);
                if (target[k2] < lo - tol || target[k2] > hi + tol) inside = false;
            }
            if (!inside) continue;
            const auto ci = detail::invert_bilinear(c[0], c[1], c[2], c[3], target);
            if (ci.u < -kInside || ci.u > 1 + kInside || ci.v < -kInside || ci.v > 1 + kInside) continue;
            if (ci.residual < best.residual) {
                best = ci;
                best_cell = {i, m};
            }
        }
        if (best.residual <= 1e-9 * (std::abs(l1) + 1.0)) {
            KappaBeta kb;
            kb.kappa = g.kappa_at(best_cell[0]) + std::clamp(best.u, 0.0, 1.0) * g.kappa_step();
            kb.beta = (static_cast<double>(best_cell[1]) + std::clamp(best.v, 0.0, 1.0)) * g.beta_step();
            kb.beta = std::clamp(kb.beta, 0.0, kb.kappa - kBetaGap);
            return kb;
        }
    }

    // closest point on the boundary polygon, mapped back linearly along its edge
    double best_d = std::numeric_limits<double>::infinity();
    KappaBeta out{kKappaMin, 0.0, true};
    const auto& bd = idx.boundary;
    for (std::size_t k = 0; k < bd.size(); ++k) {
        const auto& p = bd[k];
        const auto& q = bd[(k + 1) % bd.size()];
        const auto& a = lut.nodes[g.index(p[0], p[1])];
        const auto& b = lut.nodes[g.index(q[0], q[1])];
        const double e0 = b[0] - a[0], e1 = b[1] - a[1];
        const double len2 = e0 * e0 + e1 * e1;
        double t = len2 > 0.0 ? ((l1 - a[0]) * e0 + (l2 - a[1]) * e1) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double d = std::hypot(a[0] + t * e0 - l1, a[1] + t * e1 - l2);
        if (d < best_d) {
            best_d = d;
            const double ka = g.kappa_at(p[0]), kb = g.kappa_at(q[0]);
            const double ba = g.beta_at(p[1]), bb = g.beta_at(q[1]);
            out.kappa = ka + t * (kb - ka);
            out.beta = std::clamp(ba + t * (bb - ba), 0.0, out.kappa - kBetaGap);
        }
    }
    return out;
}

namespace detail {

inline void write_lut_header(binary::Writer& w, const LutGrid& g, std::uint32_t quad) {
    w.put_bytes(std::string_view(kLutMagic, sizeof(kLutMagic)));
    w.put<std::uint32_t>(kLutVersion);
    w.put<std::uint32_t>(quad);
    w.put<double>(g.kappa_start());
    w.put<double>(g.kappa_step());
    w.put<std::uint32_t>(g.kappa_count());
    w.put<double>(g.beta_step());
}

inline LutGrid read_lut_header(binary::Reader& r, std::uint32_t& quad) {
    r.expect_bytes(std::string_view(kLutMagic, sizeof(kLutMagic)), "lookup table");
    const auto at = r.offset();
    const auto version = r.get<std::uint32_t>("version");
    if (version != kLutVersion)
        throw FormatError("lookup table version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kLutVersion) + ")",
                          at);
    quad = r.get<std::uint32_t>("quadrature order");
    const auto grid_at = r.offset();
    const double ks = r.get<double>("kappa start");
    const double kd = r.get<double>("kappa step");
    const auto kc = r.get<std::uint32_t>("kappa count");
    const double bs = r.get<double>("beta step");
    if (!(kd > 0.0) || !(bs > 0.0) || kc < 2 || !(ks >= kBetaGap) || kc > 1000000)
        throw FormatError("invalid lookup table grid", grid_at);
    return LutGrid(ks, kd, kc, bs);
}

}  // namespace detail

inline std::vector<unsigned char> encode(const ConvLut& lut) {
    binary::Writer w;
    detail::write_lut_header(w, lut.grid, lut.quadrature_order);
    for (const auto& t : lut.nodes)
        for (std::size_t k = 0; k < kNumCoeffs; ++k) w.put<double>(t[k]);
    return w.bytes();
}

inline std::vector<unsigned char> encode(const InitLut& lut) {
    binary::Writer w;
    detail::write_lut_header(w, lut.grid, lut.quadrature_order);
    for (const auto& n : lut.nodes) {
        w.put<double>(n[0]);
        w.put<double>(n[1]);
    }
    return w.bytes();
}

inline ConvLut decode_conv_lut(std::vector<unsigned char> bytes) {
    binary::Reader r(std::move(bytes));
    ConvLut lut;
    lut.grid = detail::read_lut_header(r, lut.quadrature_order);
    const std::size_t n = lut.grid.node_count();
    if (r.remaining() != n * kNumCoeffs * sizeof(double))
        throw FormatError("convolution table payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                              std::to_string(n * kNumCoeffs * sizeof(double)),
                          r.offset());
    lut.nodes.resize(n);
    for (auto& t : lut.nodes)
        for (std::size_t k = 0; k < kNumCoeffs; ++k) t[k] = r.get<double>("node");
    return lut;
}

inline InitLut decode_init_lut(std::vector<unsigned char> bytes) {
    binary::Reader r(std::move(bytes));
    InitLut lut;
    lut.grid = detail::read_lut_header(r, lut.quadrature_order);
    const std::size_t n = lut.grid.node_count();
    if (r.remaining() != n * 2 * sizeof(double))
        throw FormatError("initialization table payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                              std::to_string(n * 2 * sizeof(double)),
                          r.offset());
    lut.nodes.resize(n);
    for (auto& p : lut.nodes) {
        p[0] = r.get<double>("node");
        p[1] = r.get<double>("node");
    }
    lut.index = index_init_lut(lut);
    return lut;
}

inline void write_lut(const std::string& path, const ConvLut& lut) { binary::write_file(path, encode(lut)); }
inline void write_lut(const std::string& path, const InitLut& lut) { binary::write_file(path, encode(lut)); }

inline ConvLut read_conv_lut(const std::string& path) { return decode_conv_lut(binary::read_file(path)); }
inline InitLut read_init_lut(const std::string& path) { return decode_init_lut(binary::read_file(path)); }

}  // namespace fanfilter
