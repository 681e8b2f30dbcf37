#pragma once

// Modified Rodrigues parameter charts on the unit quaternions.

#include <cmath>

#include <Eigen/Geometry>

#include "fanfilter/error.hpp"
#include "fanfilter/tensor.hpp"

namespace fanfilter {

using Quat = Eigen::Quaterniond;

inline constexpr double kMrpBound = 4.0;

/// Representative with q_w >= 0.
inline Quat canonical(const Quat& q) {
    return q.w() < 0.0 ? Quat(-q.w(), -q.x(), -q.y(), -q.z()) : q;
}

/// e = 4 q_vec / (1 + q_w), after flipping q to q_w >= 0.
inline Vec3 mrp_from_quat(const Quat& q) {
    if (!(std::abs(q.norm() - 1.0) <= 1e-9)) throw ContractViolation("mrp_from_quat: quaternion not unit");
    const Quat c = canonical(q);
    return (4.0 / (1.0 + c.w())) * c.vec();
}

/// q = (16 - |e|^2, 8 e) / (16 + |e|^2).
inline Quat quat_from_mrp(const Vec3& e) {
    const double n2 = e.squaredNorm();
    if (!(n2 <= kMrpBound * kMrpBound)) throw ChartDomainError("quat_from_mrp: |e| exceeds 4");
    const double d = 16.0 + n2;
    const Vec3 v = (8.0 / d) * e;
    return Quat((16.0 - n2) / d, v.x(), v.y(), v.z());
}

/// Coordinates of q in the chart centered at c: phi(conj(c) * q).
inline Vec3 chart_to(const Quat& q, const Quat& c) { return mrp_from_quat(c.conjugate() * q); }

/// Inverse chart: c * phi^{-1}(e).
inline Quat chart_from(const Vec3& e, const Quat& c) { return c * quat_from_mrp(e); }

/// Rotation taking e_z to mu1 and e_y to mu2 (columns mu2 x mu1, mu2, mu1), q_w >= 0.
inline Quat quat_from_frame(const Vec3& mu1, const Vec3& mu2) {
    if (!(std::abs(mu1.norm() - 1.0) <= 1e-9) || !(std::abs(mu2.norm() - 1.0) <= 1e-9))
        throw ContractViolation("quat_from_frame: axes must be unit vectors");
    if (!(std::abs(mu1.dot(mu2)) < 1e-6)) throw ContractViolation("quat_from_frame: axes not orthogonal");
    // re-orthogonalize the tiny residual so the matrix is a rotation to machine precision
    const Vec3 z = mu1;
    const Vec3 y = (mu2 - mu2.dot(z) * z).normalized();
    Mat3 m;
    m.col(0) = y.cross(z);
    m.col(1) = y;
    m.col(2) = z;
    Quat q(m);
    q.normalize();
    return canonical(q);
}

}  // namespace fanfilter
