#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "msot/core.hpp"

namespace msot {

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // column k pairs with values[k]
};

inline bool is_symmetric(const Matrix& m, double tol = 1e-10) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

// Cyclic Jacobi rotations. Eigenvectors are sign-normalized so that the
// entry of largest magnitude is positive.
inline EigenDecomposition sym_eig(const Matrix& m, double tol = 1e-14, int max_sweeps = 100) {
  require(m.rows() == m.cols(), ErrorKind::kInvalidInput, "sym_eig needs a square matrix");
  require(m.allFinite(), ErrorKind::kInvalidInput, "sym_eig needs finite entries");
  require(is_symmetric(m), ErrorKind::kInvalidInput, "matrix is not symmetric");
  const Eigen::Index n = m.rows();
  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(a.norm(), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(2.0 * off) <= tol * scale) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(idx[k], idx[k]);
    Vector col = v.col(idx[k]);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

template <class Fn>
Matrix spectral_apply(const EigenDecomposition& e, Fn&& fn) {
  Vector f(e.values.size());
  for (Eigen::Index k = 0; k < f.size(); ++k) f(k) = fn(e.values(k));
  return e.vectors * f.asDiagonal() * e.vectors.transpose();
}

inline void require_spd_values(const Vector& values, const char* what) {
  require(values.size() > 0 && values.minCoeff() > 1e-13 && values.allFinite(), ErrorKind::kNotPositiveDefinite,
          std::string(what) + " is not positive definite");
}

inline Matrix spd_log(const Matrix& m) {
  const auto e = sym_eig(m);
  require_spd_values(e.values, "matrix");
  return spectral_apply(e, [](double x) { return std::log(x); });
}

inline Matrix spd_exp(const Matrix& s) {
  return spectral_apply(sym_eig(s), [](double x) { return std::exp(x); });
}

inline Matrix spd_pow(const Matrix& m, double power) {
  const auto e = sym_eig(m);
  require_spd_values(e.values, "matrix");
  return spectral_apply(e, [power](double x) { return std::pow(x, power); });
}

// Square root of a positive semidefinite matrix; tiny negative eigenvalues
// from round-off are clipped to zero.
inline Matrix psd_sqrt(const Matrix& m) {
  return spectral_apply(sym_eig(m), [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

// Q factor of a Householder QR with the sign fix diag(R) > 0, which makes
// the map from Gaussian matrices to Q Haar-distributed.
inline Matrix orthonormal_factor(const Matrix& z) {
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(z.rows(), z.cols());
  const Matrix r = qr.matrixQR();
  for (Eigen::Index k = 0; k < z.cols(); ++k)
    if (r(k, k) < 0.0) q.col(k) = -q.col(k);
  return q;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, GaussianStream& g) {
  Matrix z(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) z(i, j) = g();
  return z;
}

// Entries of a symmetric matrix, off-diagonals scaled by sqrt(2) so the
// Euclidean inner product of two vectors equals the Frobenius one.
inline Vector sym_vec(const Matrix& s) {
  const Eigen::Index d = s.rows();
  Vector v(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    v(k++) = s(i, i);
    for (Eigen::Index j = i + 1; j < d; ++j) v(k++) = std::sqrt(2.0) * s(i, j);
  }
  return v;
}

}  // namespace msot
