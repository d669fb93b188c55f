#ifndef TIMME_LINALG_HPP
#define TIMME_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace timme {

/// Dense matrices are double precision throughout; the graphs this engine
/// targets are small enough that precision beats speed.
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// Sparse matrices in compressed row storage, entries nonnegative.
using SpMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline Matrix densify(const SpMatrix& s) { return Matrix(s); }

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace timme

#endif  // TIMME_LINALG_HPP
