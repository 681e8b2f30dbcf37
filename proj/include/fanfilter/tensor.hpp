#pragma once

// Symmetric order-6 tensors in 3D.
//
// A tensor is stored by its 28 unique components T_abc (a+b+c = 6), one per
// monomial x^a y^b z^c, WITHOUT the multinomial weights 6!/(a!b!c!). The
// weights are folded into evaluation and the inner product. Component order is
// lexicographically descending in a, then b:
//
//   (6,0,0) (5,1,0) (5,0,1) (4,2,0) (4,1,1) (4,0,2) (3,3,0) ... (0,1,5) (0,0,6)
//
// This ordering is normative for every file format of the project.

#include <array>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "fanfilter/error.hpp"

namespace fanfilter {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kOrder = 6;
inline constexpr std::size_t kNumCoeffs = 28;

struct Monomial {
    int a, b, c;
};

namespace detail {

constexpr double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

constexpr std::array<Monomial, kNumCoeffs> make_monomials() {
    std::array<Monomial, kNumCoeffs> out{};
    std::size_t k = 0;
    for (int a = kOrder; a >= 0; --a)
        for (int b = kOrder - a; b >= 0; --b) out[k++] = Monomial{a, b, kOrder - a - b};
    return out;
}

}  // namespace detail

inline constexpr std::array<Monomial, kNumCoeffs> kMonomials = detail::make_monomials();

/// Multinomial weight 6!/(a!b!c!) of each stored component.
inline constexpr std::array<double, kNumCoeffs> kMultiplicity = [] {
    std::array<double, kNumCoeffs> w{};
    for (std::size_t i = 0; i < kNumCoeffs; ++i) {
        const auto m = kMonomials[i];
        w[i] = detail::factorial(kOrder) /
               (detail::factorial(m.a) * detail::factorial(m.b) * detail::factorial(m.c));
    }
    return w;
}();

/// Position of component (a,b,c) in the storage order.
constexpr std::size_t coeff_index(int a, int b, int c) {
    (void)c;
    std::size_t idx = 0;
    for (int ap = kOrder; ap > a; --ap) idx += static_cast<std::size_t>(kOrder - ap + 1);
    return idx + static_cast<std::size_t>(kOrder - a - b);
}

static_assert(coeff_index(6, 0, 0) == 0);
static_assert(coeff_index(5, 0, 1) == 2);
static_assert(coeff_index(0, 0, 6) == 27);

class SymTensor6 {
public:
    using Coeffs = std::array<double, kNumCoeffs>;

    SymTensor6() { c_.fill(0.0); }
    explicit SymTensor6(const Coeffs& c) : c_(c) {}

    double& operator[](std::size_t i) { return c_[i]; }
    double operator[](std::size_t i) const { return c_[i]; }
    double& at(int a, int b, int c) { return c_[coeff_index(a, b, c)]; }
    double at(int a, int b, int c) const { return c_[coeff_index(a, b, c)]; }

    const Coeffs& coeffs() const { return c_; }
    Coeffs& coeffs() { return c_; }

    Eigen::Map<const Eigen::Matrix<double, kNumCoeffs, 1>> vec() const {
        return Eigen::Map<const Eigen::Matrix<double, kNumCoeffs, 1>>(c_.data());
    }
    static SymTensor6 from_vec(const Eigen::Matrix<double, kNumCoeffs, 1>& v) {
        SymTensor6 t;
        for (std::size_t i = 0; i < kNumCoeffs; ++i) t.c_[i] = v[static_cast<Eigen::Index>(i)];
        return t;
    }

    SymTensor6& operator+=(const SymTensor6& o) {
        for (std::size_t i = 0; i < kNumCoeffs; ++i) c_[i] += o.c_[i];
        return *this;
    }
    SymTensor6& operator-=(const SymTensor6& o) {
        for (std::size_t i = 0; i < kNumCoeffs; ++i) c_[i] -= o.c_[i];
        return *this;
    }
    SymTensor6& operator*=(double s) {
        for (auto& x : c_) x *= s;
        return *this;
    }
    /// this += s * o
    SymTensor6& add_scaled(double s, const SymTensor6& o) {
        for (std::size_t i = 0; i < kNumCoeffs; ++i) c_[i] += s * o.c_[i];
        return *this;
    }

    friend SymTensor6 operator+(SymTensor6 a, const SymTensor6& b) { return a += b; }
    friend SymTensor6 operator-(SymTensor6 a, const SymTensor6& b) { return a -= b; }
    friend SymTensor6 operator*(double s, SymTensor6 a) { return a *= s; }
    friend SymTensor6 operator*(SymTensor6 a, double s) { return a *= s; }
    friend bool operator==(const SymTensor6&, const SymTensor6&) = default;

private:
    Coeffs c_;
};

namespace detail {

inline void require_unit(const Vec3& v, const char* what) {
    if (!(std::abs(v.norm() - 1.0) <= 1e-9))
        throw ContractViolation(std::string(what) + ": direction is not a unit vector");
}

struct Powers {
    std::array<double, kOrder + 1> x, y, z;
    explicit Powers(const Vec3& v) {
        x[0] = y[0] = z[0] = 1.0;
        for (int k = 1; k <= kOrder; ++k) {
            x[k] = x[k - 1] * v.x();
            y[k] = y[k - 1] * v.y();
            z[k] = z[k - 1] * v.z();
        }
    }
    double mono(const Monomial& m) const { return x[m.a] * y[m.b] * z[m.c]; }
};

/// Evaluation without the unit-length check; also valid for non-unit v
/// (returns the homogeneous polynomial value).
inline double eval_unchecked(const SymTensor6& t, const Vec3& v) {
    const Powers p(v);
    double s = 0.0;
    for (std::size_t i = 0; i < kNumCoeffs; ++i) s += kMultiplicity[i] * t[i] * p.mono(kMonomials[i]);
    return s;
}

}  // namespace detail

/// Polynomial value sum_{abc} 6!/(a!b!c!) T_abc x^a y^b z^c at a unit direction.
inline double eval_poly(const SymTensor6& t, const Vec3& v) {
    detail::require_unit(v, "eval_poly");
    return detail::eval_unchecked(t, v);
}

/// Euclidean gradient of the tensor polynomial at v (not projected to the sphere).
inline Vec3 poly_gradient(const SymTensor6& t, const Vec3& v) {
    const detail::Powers p(v);
    Vec3 g = Vec3::Zero();
    for (std::size_t i = 0; i < kNumCoeffs; ++i) {
        const auto m = kMonomials[i];
        const double w = kMultiplicity[i] * t[i];
        if (w == 0.0) continue;
        if (m.a > 0) g.x() += w * m.a * p.x[m.a - 1] * p.y[m.b] * p.z[m.c];
        if (m.b > 0) g.y() += w * m.b * p.x[m.a] * p.y[m.b - 1] * p.z[m.c];
        if (m.c > 0) g.z() += w * m.c * p.x[m.a] * p.y[m.b] * p.z[m.c - 1];
    }
    return g;
}

/// alpha * v^{(x)6}.
inline SymTensor6 rank1(double alpha, const Vec3& v) {
    if (!(alpha >= 0.0)) throw ContractViolation("rank1: alpha must be non-negative");
    detail::require_unit(v, "rank1");
    const detail::Powers p(v);
    SymTensor6 t;
    for (std::size_t i = 0; i < kNumCoeffs; ++i) t[i] = alpha * p.mono(kMonomials[i]);
    return t;
}

/// Apolar (Bombieri) inner product; <u^6, w^6> = <u,w>^6.
inline double apolar_dot(const SymTensor6& a, const SymTensor6& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < kNumCoeffs; ++i) s += kMultiplicity[i] * a[i] * b[i];
    return s;
}

inline double apolar_norm(const SymTensor6& t) { return std::sqrt(apolar_dot(t, t)); }

/// Proper rotation matrix (orthogonal, det = +1).
class Rotation3 {
public:
    Rotation3() : m_(Mat3::Identity()) {}

    /// Validates orthogonality and orientation to 1e-12.
    static Rotation3 from_matrix(const Mat3& m) {
        if (!((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-12) ||
            !(std::abs(m.determinant() - 1.0) <= 1e-12))
            throw ContractViolation("Rotation3: matrix is not a proper rotation");
        return Rotation3(m);
    }

    /// R_z as used in the zyz decomposition (rows (c, s, 0), (-s, c, 0), (0, 0, 1)).
    static Rotation3 rz(double a) {
        Mat3 m;
        m << std::cos(a), std::sin(a), 0, -std::sin(a), std::cos(a), 0, 0, 0, 1;
        return Rotation3(m);
    }
    /// R_y as used in the zyz decomposition (rows (c, 0, s), (0, 1, 0), (-s, 0, c)).
    static Rotation3 ry(double a) {
        Mat3 m;
        m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
        return Rotation3(m);
    }
    /// D(theta, psi, omega) = R_z(theta) R_y(psi) R_z(omega).
    static Rotation3 zyz(double theta, double psi, double omega) {
        return Rotation3(rz(theta).m_ * ry(psi).m_ * rz(omega).m_);
    }

    const Mat3& matrix() const { return m_; }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    Rotation3 operator*(const Rotation3& o) const { return Rotation3(m_ * o.m_); }
    Rotation3 inverse() const { return Rotation3(m_.transpose()); }

private:
    explicit Rotation3(const Mat3& m) : m_(m) {}
    friend Rotation3 rotation_unchecked(const Mat3& m);
    Mat3 m_;
};

/// Builds a rotation without validation; for matrices that are orthogonal by construction.
inline Rotation3 rotation_unchecked(const Mat3& m) { return Rotation3(m); }

namespace detail {

/// Monomials x^a y^b z^c of every degree d <= 6, indexed in the same
/// lexicographically descending (a, then b) order as the tensor coefficients,
/// with the index map for multiplication by x, y or z.
struct MonomialTables {
    std::array<int, kOrder + 1> count{};
    std::array<std::array<std::array<int, kOrder + 1>, kOrder + 1>, kOrder + 1> index{};  // [d][a][b]
    std::array<std::array<std::array<int, 3>, kNumCoeffs>, kOrder + 1> times{};           // [d][j][var]
    std::array<std::array<std::array<int, 2>, kNumCoeffs>, kOrder + 1> ab{};              // [d][j] -> (a, b)
};

inline const MonomialTables& monomial_tables() {
    static const MonomialTables t = [] {
        MonomialTables m;
        for (int d = 0; d <= kOrder; ++d) {
            int j = 0;
            for (int a = d; a >= 0; --a)
                for (int b = d - a; b >= 0; --b) {
                    m.index[d][a][b] = j;
                    m.ab[d][j] = {a, b};
                    ++j;
                }
            m.count[d] = j;
        }
        for (int d = 0; d < kOrder; ++d)
            for (int j = 0; j < m.count[d]; ++j) {
                const auto [a, b] = m.ab[d][j];
                m.times[d][j] = {m.index[d + 1][a + 1][b], m.index[d + 1][a][b + 1], m.index[d + 1][a][b]};
            }
        return m;
    }();
    return t;
}

}  // namespace detail

/// Tensor whose polynomial is v -> T(R^T v); exact re-expansion of the
/// degree-6 polynomial under the linear substitution x_k -> <R.col(k), v>.
/// Each product of linear forms L1^a L2^b L3^c is expanded from one of its
/// degree-(d-1) factors; only products needed by nonzero coefficients are formed.
namespace detail {

constexpr int mono_count(int d) { return (d + 1) * (d + 2) / 2; }

constexpr int mono_index(int d, int a, int b) {
    int s = 0;
    for (int a2 = d; a2 > a; --a2) s += d - a2 + 1;
    return s + (d - a - b);
}

/// Target index of the product of monomial i (degree DA) and monomial j (degree DB).
template <int DA, int DB>
constexpr auto make_mul_table() {
    std::array<std::array<int, mono_count(DB)>, mono_count(DA)> t{};
    for (int a1 = DA; a1 >= 0; --a1)
        for (int b1 = DA - a1; b1 >= 0; --b1)
            for (int a2 = DB; a2 >= 0; --a2)
                for (int b2 = DB - a2; b2 >= 0; --b2)
                    t[mono_index(DA, a1, b1)][mono_index(DB, a2, b2)] = mono_index(DA + DB, a1 + a2, b1 + b2);
    return t;
}

template <int DA, int DB>
inline void mul_acc(const double* p, const double* q, double* out) {
    static constexpr auto t = make_mul_table<DA, DB>();
    for (int i = 0; i < mono_count(DA); ++i)
        for (int j = 0; j < mono_count(DB); ++j) out[t[i][j]] += p[i] * q[j];
}

/// Rotation of a tensor whose nonzero coefficients all have even exponents
/// (any tensor symmetric under the three axis reflections). With S_k = L_k^2,
/// the sum over x^2a y^2b z^2c is nested as sum_k S_k sum_{j>=k} S_j sum_{i>=j} w S_i.
inline SymTensor6 rotate_even_tensor(const SymTensor6& t, const Mat3& r) {
    std::array<std::array<double, 6>, 3> sq;
    for (int k = 0; k < 3; ++k) {
        const double x = r(0, k), y = r(1, k), z = r(2, k);
        sq[k] = {x * x, 2 * x * y, 2 * x * z, y * y, 2 * y * z, z * z};
    }
    std::array<std::array<std::array<double, 6>, 3>, 3> g{};
    for (std::size_t n = 0; n < kNumCoeffs; ++n) {
        if (t[n] == 0.0) continue;
        const Monomial m = kMonomials[n];
        int e[3] = {m.a / 2, m.b / 2, m.c / 2};
        int idx[3], c = 0;
        for (int v = 0; v < 3; ++v)
            while (e[v]-- > 0) idx[c++] = v;
        const double w = kMultiplicity[n] * t[n];
        for (int q = 0; q < 6; ++q) g[idx[0]][idx[1]][q] += w * sq[idx[2]][q];
    }
    std::array<double, kNumCoeffs> acc{};
    for (int k = 0; k < 3; ++k) {
        std::array<double, 15> h{};
        for (int j = k; j < 3; ++j) mul_acc<2, 2>(sq[j].data(), g[k][j].data(), h.data());
        mul_acc<4, 2>(h.data(), sq[k].data(), acc.data());
    }
    SymTensor6 out;
    for (std::size_t m = 0; m < kNumCoeffs; ++m) out[m] = acc[m] / kMultiplicity[m];
    return out;
}

inline bool has_only_even_terms(const SymTensor6& t) {
    for (std::size_t n = 0; n < kNumCoeffs; ++n)
        if (t[n] != 0.0 && (kMonomials[n].a % 2 != 0 || kMonomials[n].b % 2 != 0)) return false;
    return true;
}

}  // namespace detail

inline SymTensor6 rotate_tensor(const SymTensor6& t, const Rotation3& rot) {
    const Mat3& r = rot.matrix();
    if (detail::has_only_even_terms(t)) return detail::rotate_even_tensor(t, r);
    const auto& mt = detail::monomial_tables();
    using Poly = std::array<double, kNumCoeffs>;
    // products indexed by degree and monomial (a, b) of the linear forms
    std::array<std::array<Poly, kNumCoeffs>, kOrder + 1> prod;
    std::array<std::array<bool, kNumCoeffs>, kOrder + 1> need{};

    for (std::size_t i = 0; i < kNumCoeffs; ++i)
        if (t[i] != 0.0) need[kOrder][i] = true;
    auto parent = [&](int d, int j, int& var) {
        const auto [a, b] = mt.ab[d][j];
        var = a > 0 ? 0 : (b > 0 ? 1 : 2);
        return var == 0 ? mt.index[d - 1][a - 1][b] : (var == 1 ? mt.index[d - 1][a][b - 1] : mt.index[d - 1][a][b]);
    };
    for (int d = kOrder; d >= 1; --d)
        for (int j = 0; j < mt.count[d]; ++j)
            if (need[d][j]) {
                int var;
                need[d - 1][parent(d, j, var)] = true;
            }

    prod[0][0] = {};
    prod[0][0][0] = 1.0;
    for (int d = 1; d <= kOrder; ++d)
        for (int j = 0; j < mt.count[d]; ++j) {
            if (!need[d][j]) continue;
            int var;
            const Poly& p = prod[d - 1][parent(d, j, var)];
            Poly& out = prod[d][j];
            std::fill(out.begin(), out.begin() + mt.count[d], 0.0);
            const double lx = r(0, var), ly = r(1, var), lz = r(2, var);
            for (int q = 0; q < mt.count[d - 1]; ++q) {
                const double pq = p[q];
                const auto& tm = mt.times[d - 1][q];
                out[tm[0]] += pq * lx;
                out[tm[1]] += pq * ly;
                out[tm[2]] += pq * lz;
            }
        }

    std::array<double, kNumCoeffs> acc{};
    for (std::size_t i = 0; i < kNumCoeffs; ++i) {
        if (!need[kOrder][i]) continue;
        const double w = kMultiplicity[i] * t[i];
        const Poly& p = prod[kOrder][i];
        for (std::size_t k = 0; k < kNumCoeffs; ++k) acc[k] += w * p[k];
    }
    SymTensor6 out;
    for (std::size_t i = 0; i < kNumCoeffs; ++i) out[i] = acc[i] / kMultiplicity[i];
    return out;
}

}  // namespace fanfilter
