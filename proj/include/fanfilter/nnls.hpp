#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fanfilter/error.hpp"

namespace fanfilter {

/// Non-negative least squares in normal-equation form:
///   minimize  x^T G x - 2 b^T x   subject to x >= 0,
/// with G symmetric positive semi-definite. The active set is found by
/// enumerating all supports, which is exact and cheap for the n <= 6 systems
/// used here.
inline Eigen::VectorXd nnls_normal(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs) {
    const Eigen::Index n = rhs.size();
    if (gram.rows() != n || gram.cols() != n) throw ContractViolation("nnls_normal: dimension mismatch");
    if (n > 12) throw ContractViolation("nnls_normal: system too large for support enumeration");

    Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
    double best_obj = 0.0;  // objective of x = 0
    const unsigned subsets = 1u << static_cast<unsigned>(n);
    for (unsigned mask = 1; mask < subsets; ++mask) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < n; ++i)
            if (mask & (1u << static_cast<unsigned>(i))) idx.push_back(i);
        const auto k = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd g(k, k);
        Eigen::VectorXd r(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            r[i] = rhs[idx[static_cast<std::size_t>(i)]];
            for (Eigen::Index j = 0; j < k; ++j)
                g(i, j) = gram(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) continue;
        const Eigen::VectorXd xs = ldlt.solve(r);
        if (!xs.allFinite() || (xs.array() < 0.0).any()) continue;
        // reject numerically singular supports: the solve must actually satisfy the system
        if ((g * xs - r).norm() > 1e-9 * (r.norm() + 1.0)) continue;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < k; ++i) x[idx[static_cast<std::size_t>(i)]] = xs[i];
        const double obj = x.dot(gram * x) - 2.0 * rhs.dot(x);
        if (obj < best_obj) {
            best_obj = obj;
            best = x;
        }
    }
    return best;
}

}  // namespace fanfilter
