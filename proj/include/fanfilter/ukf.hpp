#pragma once

// Per-fiber unscented Kalman filter on (alpha, kappa, beta, e) where e are
// MRP coordinates of the fiber frame in a chart centered at chart_q.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fanfilter/bingham.hpp"
#include "fanfilter/error.hpp"
#include "fanfilter/lut.hpp"
#include "fanfilter/quaternion.hpp"
#include "fanfilter/tensor.hpp"

namespace fanfilter {

enum class Model { bingham, watson, lowrank };

inline const char* model_name(Model m) {
    switch (m) {
        case Model::bingham: return "bingham";
        case Model::watson: return "watson";
        case Model::lowrank: return "lowrank";
    }
    return "?";
}

inline constexpr int kStateDim = 6;
using Vec6 = Eigen::Matrix<double, kStateDim, 1>;
using Mat6 = Eigen::Matrix<double, kStateDim, kStateDim>;
using Meas = Eigen::Matrix<double, kNumCoeffs, 1>;

enum StateIndex { kAlpha = 0, kKappa = 1, kBeta = 2, kE1 = 3, kE2 = 4, kE3 = 5 };

/// Diagonal process noise Q (alpha, kappa, beta, e1, e2, e3) and the scalar R of R*I.
/// Zero entries are allowed and, together with a zero prior variance, freeze a coordinate.
struct NoiseConfig {
    std::array<double, kStateDim> q{};
    double r = 0.02;

    static NoiseConfig defaults(Model m) {
        switch (m) {
            case Model::bingham: return {{0.01, 0.1, 0.1, 0.005, 0.005, 0.005}, 0.02};
            case Model::watson: return {{0.05, 0.05, 0.0, 0.02, 0.02, 0.02}, 0.02};
            case Model::lowrank: return {{0.01, 0.0, 0.0, 0.005, 0.005, 0.005}, 0.02};
        }
        return {};
    }

    void validate() const {
        for (double v : q)
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("process noise entries must be >= 0");
        if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("measurement noise R must be > 0");
    }
};

/// Scaled unscented transform parameters.
struct SigmaParams {
    double alpha = 0.1;
    double beta = 2.0;
    double kappa = 0.0;
};

struct UkfFiberState {
    Vec6 mean = Vec6::Zero();
    Quat chart_q = Quat::Identity();
    Mat6 cov = Mat6::Zero();

    double alpha() const { return mean[kAlpha]; }
    double kappa() const { return mean[kKappa]; }
    double beta() const { return mean[kBeta]; }
    Quat orientation() const { return chart_from(mean.tail<3>(), chart_q).normalized(); }
    Vec3 mu1() const { return orientation() * Vec3::UnitZ(); }
    BinghamCompartment compartment() const {
        return {std::max(0.0, alpha()), orientation(), kappa(), beta()};
    }
};

/// The fixed ingredients of one filter: model variant, lookup table and tuning.
struct UkfModel {
    Model model = Model::bingham;
    const ConvLut* lut = nullptr;
    NoiseConfig noise = NoiseConfig::defaults(Model::bingham);
    SigmaParams sigma{};
};

namespace detail {

inline void clamp_state(Vec6& x, Model m) {
    if (!(x[kAlpha] >= 0.0)) x[kAlpha] = 0.0;
    if (m == Model::lowrank) return;
    x[kKappa] = std::clamp(x[kKappa], kKappaMin, kKappaMax);
    x[kBeta] = std::clamp(x[kBeta], 0.0, x[kKappa] - kBetaGap);
}

/// Response of one compartment given directly by its parameters; sigma points
/// may carry a negative alpha, which is used as is.
inline SymTensor6 compartment_response(double alpha, const Quat& q, double kappa, double beta, const UkfModel& m) {
    const Quat qn = q.normalized();
    if (m.model == Model::lowrank) return rank1(1.0, qn * Vec3::UnitZ()) * alpha;
    const double k = std::clamp(kappa, kKappaMin, kKappaMax);
    const double b = std::clamp(beta, 0.0, k - kBetaGap);
    const SymTensor6 canonical = conv_lookup(*m.lut, k, b);
    if (qn.vec().isZero(0.0)) return alpha * canonical;
    return alpha * rotate_tensor(canonical, rotation_unchecked(qn.toRotationMatrix()));
}

inline SymTensor6 others_response(const std::vector<BinghamCompartment>& others, const UkfModel& m) {
    SymTensor6 s;
    for (const auto& c : others) s += compartment_response(c.alpha, c.q, c.kappa, c.beta, m);
    return s;
}

inline Meas measure(const Vec6& x, const Quat& chart, const SymTensor6& others, const UkfModel& m) {
    const Quat q = chart_from(x.tail<3>(), chart);
    SymTensor6 t = compartment_response(x[kAlpha], q, x[kKappa], x[kBeta], m);
    t += others;
    return t.vec();
}

struct SigmaSet {
    std::vector<int> active;  // state indices that take part in the transform
    std::vector<Vec6> points;
    std::vector<double> wm, wc;
};

/// Sigma points of (mean, cov) over the non-frozen coordinates, with the
/// Cholesky factor computed under escalating diagonal jitter.
inline SigmaSet make_sigma_points(const Vec6& mean, const Mat6& cov, const std::vector<int>& active,
                                  const SigmaParams& sp) {
    SigmaSet s;
    s.active = active;
    const int n = static_cast<int>(active.size());
    const double lambda = sp.alpha * sp.alpha * (n + sp.kappa) - n;
    const double c = n + lambda;
    Eigen::MatrixXd pa(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) pa(i, j) = cov(active[static_cast<std::size_t>(i)], active[static_cast<std::size_t>(j)]);

    Eigen::MatrixXd l;
    bool ok = false;
    for (double jitter : {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4}) {
        Eigen::MatrixXd pj = pa;
        pj.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(pj);
        if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite()) {
            l = llt.matrixL();
            ok = true;
            break;
        }
    }
    if (!ok) throw FilterDivergence("covariance is not positive definite");
    l *= std::sqrt(c);

    s.points.assign(static_cast<std::size_t>(2 * n + 1), mean);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int d = active[static_cast<std::size_t>(i)];
            s.points[static_cast<std::size_t>(1 + j)][d] += l(i, j);
            s.points[static_cast<std::size_t>(1 + n + j)][d] -= l(i, j);
        }
    s.wm.assign(s.points.size(), 1.0 / (2.0 * c));
    s.wc = s.wm;
    s.wm[0] = lambda / c;
    s.wc[0] = lambda / c + (1.0 - sp.alpha * sp.alpha + sp.beta);
    return s;
}

inline std::vector<int> active_dims(const Mat6& cov, const NoiseConfig& noise) {
    std::vector<int> a;
    for (int i = 0; i < kStateDim; ++i)
        if (!(cov(i, i) == 0.0 && noise.q[static_cast<std::size_t>(i)] == 0.0)) a.push_back(i);
    return a;
}

struct Transformed {
    SigmaSet sigma;
    Quat chart;
    std::vector<Meas> z;
    Meas z_hat;
};

/// Steps 1-5 of an update: predict, sigma points, chart update and transition,
/// measurement of every sigma point.
inline Transformed transform(const UkfFiberState& st, const std::vector<BinghamCompartment>& others,
                             const UkfModel& m, Mat6& p_pred) {
    p_pred = st.cov;
    for (int i = 0; i < kStateDim; ++i) p_pred(i, i) += m.noise.q[static_cast<std::size_t>(i)];
    Transformed t;
    t.sigma = make_sigma_points(st.mean, p_pred, active_dims(p_pred, m.noise), m.sigma);
    auto& pts = t.sigma.points;

    Vec3 e_mean = Vec3::Zero();
    for (std::size_t k = 0; k < pts.size(); ++k) e_mean += t.sigma.wm[k] * pts[k].tail<3>();
    try {
        t.chart = canonical(chart_from(e_mean, st.chart_q).normalized());
        for (auto& x : pts) {
            const Quat q = chart_from(x.tail<3>(), st.chart_q);
            x.tail<3>() = chart_to(q.normalized(), t.chart);
        }
    } catch (const ChartDomainError&) {
        throw FilterDivergence("sigma point left the chart domain");
    }

    const SymTensor6 frozen = others_response(others, m);
    t.z.resize(pts.size());
    t.z_hat.setZero();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        t.z[k] = measure(pts[k], t.chart, frozen, m);
        t.z_hat += t.sigma.wm[k] * t.z[k];
    }
    return t;
}

}  // namespace detail

/// Predicted measurement z_hat of the next update (same computation as ukf_update).
inline SymTensor6 predict_measurement(const UkfFiberState& st, const std::vector<BinghamCompartment>& others,
                                      const UkfModel& m) {
    Mat6 p;
    return SymTensor6::from_vec(detail::transform(st, others, m, p).z_hat);
}

/// One predict/update cycle with chart update; the other fibers enter as a
/// fixed additive response. After the update the e-part is folded into the
/// chart, so the returned state always has e = 0.
inline UkfFiberState ukf_update(const UkfFiberState& st, const SymTensor6& z,
                                const std::vector<BinghamCompartment>& others, const UkfModel& m) {
    Mat6 p_pred;
    const auto t = detail::transform(st, others, m, p_pred);
    const auto& pts = t.sigma.points;

    Vec6 x_mean = Vec6::Zero();
    for (std::size_t k = 0; k < pts.size(); ++k) x_mean += t.sigma.wm[k] * pts[k];
    for (int i = 0; i < kStateDim; ++i)
        if (std::find(t.sigma.active.begin(), t.sigma.active.end(), i) == t.sigma.active.end()) x_mean[i] = st.mean[i];

    Mat6 pxx = Mat6::Zero();
    Eigen::Matrix<double, kNumCoeffs, kNumCoeffs> pzz = Eigen::Matrix<double, kNumCoeffs, kNumCoeffs>::Zero();
    Eigen::Matrix<double, kStateDim, kNumCoeffs> pxz = Eigen::Matrix<double, kStateDim, kNumCoeffs>::Zero();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Vec6 dx = pts[k] - x_mean;
        const Meas dz = t.z[k] - t.z_hat;
        pxx += t.sigma.wc[k] * dx * dx.transpose();
        pzz += t.sigma.wc[k] * dz * dz.transpose();
        pxz += t.sigma.wc[k] * dx * dz.transpose();
    }
    pzz.diagonal().array() += m.noise.r;

    const Eigen::LDLT<Eigen::Matrix<double, kNumCoeffs, kNumCoeffs>> ldlt(pzz);
    if (ldlt.info() != Eigen::Success) throw FilterDivergence("innovation covariance is singular");
    const Eigen::Matrix<double, kStateDim, kNumCoeffs> gain = ldlt.solve(pxz.transpose()).transpose();
    if (!gain.allFinite()) throw FilterDivergence("non-finite Kalman gain");

    UkfFiberState out;
    out.mean = x_mean + gain * (z.vec() - t.z_hat);
    out.cov = pxx - gain * pzz * gain.transpose();
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    for (int i = 0; i < kStateDim; ++i)
        if (std::find(t.sigma.active.begin(), t.sigma.active.end(), i) == t.sigma.active.end()) {
            out.cov.row(i).setZero();
            out.cov.col(i).setZero();
        }
    if (!out.mean.allFinite() || !out.cov.allFinite()) throw FilterDivergence("non-finite filter state");
    detail::clamp_state(out.mean, m.model);

    try {
        out.chart_q = canonical(chart_from(out.mean.tail<3>(), t.chart).normalized());
    } catch (const ChartDomainError&) {
        throw FilterDivergence("state left the chart domain");
    }
    out.mean.tail<3>().setZero();
    return out;
}

}  // namespace fanfilter
