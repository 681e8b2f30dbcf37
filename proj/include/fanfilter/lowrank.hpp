#pragma once

// Rank-r approximation of order-6 tensors, the tangent-space Hessian of the
// rank-1 objective, and the non-negative fraction fit used at initialization.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "fanfilter/error.hpp"
#include "fanfilter/nnls.hpp"
#include "fanfilter/tensor.hpp"

namespace fanfilter {

/// One fiber of a low-rank approximation.
struct FiberPeak {
    double alpha = 0.0;
    Vec3 v = Vec3::UnitZ();
};

/// Representative of the axis {v, -v}: v_z > 0, else v_y > 0, else v_x > 0.
inline Vec3 canonical_axis(const Vec3& v) {
    if (v.z() > 0.0) return v;
    if (v.z() < 0.0) return -v;
    if (v.y() > 0.0) return v;
    if (v.y() < 0.0) return -v;
    return v.x() >= 0.0 ? v : Vec3(-v);
}

struct TangentHessian {
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();  // in the frame {t1, t2}
    double lambda1 = 0.0;                         // larger eigenvalue
    double lambda2 = 0.0;                         // smaller eigenvalue, clamped at 0
    Vec3 t1 = Vec3::UnitX();
    Vec3 t2 = Vec3::UnitY();
    Vec3 u1 = Vec3::UnitX();  // world-space eigenvector of lambda1
    Vec3 u2 = Vec3::UnitY();  // world-space eigenvector of lambda2 (dominant fanning direction)
    Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
    bool flagged = false;  // not at a local optimum, or saddle/negative curvature
};

struct LowRankOptions {
    int max_iterations = 200;
    double rel_tolerance = 1e-8;
    double drop_fraction = 0.01;
    int num_starts = 32;
};

namespace detail {

/// Low-discrepancy (Fibonacci) directions on the upper hemisphere.
inline std::vector<Vec3> hemisphere_starts(int n) {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(n));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
        const double z = 1.0 - (k + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * k;
        out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return out;
}

/// One monotone ascent step of v -> T(v) on the sphere. Tries the power-iteration
/// step first and falls back to a backtracked projected-gradient step.
inline Vec3 ascent_step(const SymTensor6& t, const Vec3& v) {
    const double p0 = eval_unchecked(t, v);
    const Vec3 g = poly_gradient(t, v);
    const Vec3 gt = g - g.dot(v) * v;
    if (gt.norm() <= 1e-15 * (g.norm() + 1e-300)) return v;

    if (g.dot(v) > 0.0) {
        const Vec3 w = g.normalized();
        if (eval_unchecked(t, w) >= p0) return w;
    }
    double step = 1.0 / (6.0 * std::abs(p0) + gt.norm());
    for (int k = 0; k < 60; ++k, step *= 0.5) {
        const Vec3 w = (v + step * gt).normalized();
        if (eval_unchecked(t, w) >= p0 + 1e-4 * step * gt.squaredNorm()) return w;
    }
    return v;
}

inline Vec3 maximize_on_sphere(const SymTensor6& t, Vec3 v, int iters) {
    double p = eval_unchecked(t, v);
    for (int k = 0; k < iters; ++k) {
        const Vec3 w = ascent_step(t, v);
        const double pw = eval_unchecked(t, w);
        const bool done = std::abs(pw - p) <= 1e-14 * (std::abs(p) + 1e-300);
        v = w;
        p = pw;
        if (done) break;
    }
    return v;
}

inline SymTensor6 model_sum(const std::vector<double>& alphas, const std::vector<Vec3>& dirs,
                            std::size_t skip = static_cast<std::size_t>(-1)) {
    SymTensor6 s;
    for (std::size_t j = 0; j < dirs.size(); ++j)
        if (j != skip && alphas[j] > 0.0) s += rank1(alphas[j], dirs[j]);
    return s;
}

inline double objective(const SymTensor6& t, const std::vector<double>& alphas, const std::vector<Vec3>& dirs) {
    const SymTensor6 r = t - model_sum(alphas, dirs);
    return apolar_dot(r, r);
}

inline std::vector<double> fit_alphas(const SymTensor6& t, const std::vector<Vec3>& dirs) {
    const auto n = static_cast<Eigen::Index>(dirs.size());
    Eigen::MatrixXd gram(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rhs[i] = eval_unchecked(t, dirs[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < n; ++j)
            gram(i, j) = std::pow(dirs[static_cast<std::size_t>(i)].dot(dirs[static_cast<std::size_t>(j)]), kOrder);
    }
    const Eigen::VectorXd a = nnls_normal(gram, rhs);
    return std::vector<double>(a.data(), a.data() + n);
}

}  // namespace detail

/// Rank-r approximation minimizing the apolar distance to T (local optimum).
/// Deflation initialization from the best of 32 low-discrepancy starts, then
/// joint refinement alternating NNLS on the fractions and one ascent step per
/// direction. Peaks are returned by descending alpha; negligible ones dropped.
inline std::vector<FiberPeak> fit_low_rank(const SymTensor6& t, int r, const LowRankOptions& opt = {}) {
    if (r < 1 || r > 3) throw ContractViolation("fit_low_rank: rank must be 1, 2 or 3");
    const double norm2 = apolar_dot(t, t);
    if (!(norm2 > 0.0)) return {};

    const auto starts = detail::hemisphere_starts(opt.num_starts);
    std::vector<Vec3> dirs;
    std::vector<double> alphas;
    SymTensor6 residual = t;
    for (int k = 0; k < r; ++k) {
        Vec3 best = starts.front();
        double best_val = -std::numeric_limits<double>::infinity();
        for (const auto& s : starts) {
            const double val = detail::eval_unchecked(residual, s);
            if (val > best_val) {
                best_val = val;
                best = s;
            }
        }
        const Vec3 v = detail::maximize_on_sphere(residual, best, 100);
        const double a = detail::eval_unchecked(residual, v);
        if (!(a > 0.0)) break;
        dirs.push_back(v);
        alphas.push_back(a);
        residual -= rank1(a, v);
    }
    if (dirs.empty()) return {};

    double err = detail::objective(t, alphas, dirs);
    for (int it = 0; it < opt.max_iterations; ++it) {
        alphas = detail::fit_alphas(t, dirs);
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            if (!(alphas[i] > 0.0)) continue;
            const SymTensor6 ri = t - detail::model_sum(alphas, dirs, i);
            dirs[i] = detail::ascent_step(ri, dirs[i]);
        }
        const double next = detail::objective(t, alphas, dirs);
        assert(next <= err * (1.0 + 1e-10) + 1e-15 * norm2);
        const double change = std::abs(err - next);
        err = next;
        if (change <= opt.rel_tolerance * std::max(err, 1e-14 * norm2)) break;
    }
    alphas = detail::fit_alphas(t, dirs);

    double amax = 0.0;
    for (double a : alphas) amax = std::max(amax, a);
    std::vector<FiberPeak> peaks;
    for (std::size_t i = 0; i < dirs.size(); ++i)
        if (alphas[i] > 0.0 && alphas[i] >= opt.drop_fraction * amax)
            peaks.push_back(FiberPeak{alphas[i], canonical_axis(dirs[i].normalized())});
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const FiberPeak& x, const FiberPeak& y) { return x.alpha > y.alpha; });
    return peaks;
}

/// Deterministic orthonormal tangent frame {t1, t2} at v.
inline std::pair<Vec3, Vec3> tangent_frame(const Vec3& v) {
    const Vec3 a = std::abs(v.z()) > 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
    const Vec3 t1 = a.cross(v).normalized();
    const Vec3 t2 = v.cross(t1);
    return {t1, t2};
}

/// Point reached by following the geodesic from v with initial velocity w (w tangent at v).
inline Vec3 sphere_exp(const Vec3& v, const Vec3& w) {
    const double n = w.norm();
    if (n == 0.0) return v;
    return (std::cos(n) * v + std::sin(n) * (w / n)).normalized();
}

/// Hessian of E(v) = |T_res - v^6|^2 (apolar) in the tangent plane at v_star,
/// by central finite differences along geodesics with the given step (radians).
inline TangentHessian tangent_hessian(const SymTensor6& t_res, const Vec3& v_star, double step = 1e-3) {
    detail::require_unit(v_star, "tangent_hessian");
    const double nt = apolar_dot(t_res, t_res);
    auto energy = [&](const Vec3& w) { return nt - 2.0 * detail::eval_unchecked(t_res, w) + 1.0; };

    TangentHessian out;
    std::tie(out.t1, out.t2) = tangent_frame(v_star);
    auto f = [&](double s, double u) { return energy(sphere_exp(v_star, s * out.t1 + u * out.t2)); };

    const double h = step;
    const double f0 = f(0, 0);
    const double fp0 = f(h, 0), fm0 = f(-h, 0), f0p = f(0, h), f0m = f(0, -h);
    const double h11 = (fp0 - 2.0 * f0 + fm0) / (h * h);
    const double h22 = (f0p - 2.0 * f0 + f0m) / (h * h);
    const double h12 = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
    out.h << h11, h12, h12, h22;
    out.gradient << (fp0 - fm0) / (2.0 * h), (f0p - f0m) / (2.0 * h);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(out.h);
    const Eigen::Vector2d ev = es.eigenvalues();  // ascending
    const Eigen::Matrix2d vecs = es.eigenvectors();
    out.lambda1 = ev[1];
    out.lambda2 = ev[0];
    out.u1 = (vecs(0, 1) * out.t1 + vecs(1, 1) * out.t2).normalized();
    out.u2 = (vecs(0, 0) * out.t1 + vecs(1, 0) * out.t2).normalized();

    constexpr double kMaxOffset = 5.0 * std::numbers::pi / 180.0;
    if (out.lambda2 > 0.0) {
        const Eigen::Vector2d newton = out.h.ldlt().solve(out.gradient);
        if (!(newton.norm() <= kMaxOffset)) out.flagged = true;
    } else {
        out.flagged = true;
    }
    if (out.lambda2 < 0.0) out.lambda2 = 0.0;
    if (out.lambda1 < 0.0) out.lambda1 = 0.0;
    return out;
}

/// (T - sum_{j != i} alpha_j v_j^6) / alpha_i.
inline SymTensor6 residual_fodf(const SymTensor6& t, const std::vector<FiberPeak>& peaks, std::size_t i) {
    if (i >= peaks.size()) throw ContractViolation("residual_fodf: fiber index out of range");
    if (!(peaks[i].alpha >= 1e-6)) throw DegenerateFraction("residual_fodf: volume fraction too small to normalize");
    SymTensor6 r = t;
    for (std::size_t j = 0; j < peaks.size(); ++j)
        if (j != i) r -= rank1(peaks[j].alpha, peaks[j].v);
    r *= 1.0 / peaks[i].alpha;
    return r;
}

/// Non-negative fractions minimizing |T - sum alpha_i R_i| in the apolar norm.
inline std::vector<double> nnls_fractions(const SymTensor6& t, const std::vector<SymTensor6>& responses) {
    if (responses.empty() || responses.size() > 3)
        throw ContractViolation("nnls_fractions: expected 1 to 3 responses");
    const auto n = static_cast<Eigen::Index>(responses.size());
    Eigen::MatrixXd gram(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rhs[i] = apolar_dot(t, responses[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < n; ++j)
            gram(i, j) = apolar_dot(responses[static_cast<std::size_t>(i)], responses[static_cast<std::size_t>(j)]);
    }
    const Eigen::VectorXd a = nnls_normal(gram, rhs);
    return std::vector<double>(a.data(), a.data() + n);
}

}  // namespace fanfilter
