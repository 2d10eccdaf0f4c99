#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "msot/core.hpp"
#include "msot/euclidean.hpp"
#include "msot/linalg.hpp"
#include "msot/measures.hpp"

namespace msot {

inline double dist_le(const Matrix& x, const Matrix& y) { return (spd_log(x) - spd_log(y)).norm(); }

inline double dist_ai(const Matrix& x, const Matrix& y) {
  const Matrix r = spd_pow(x, -0.5);
  const auto e = sym_eig(r * y * r);
  require_spd_values(e.values, "matrix");
  return std::sqrt(e.values.array().log().square().sum());
}

// Unit-Frobenius symmetric slices A = P diag(theta) P^T with P Haar and
// theta uniform on the sphere; redrawn if two eigenvalues nearly collide.
inline std::vector<Matrix> sample_unit_symmetric(Eigen::Index d, Eigen::Index L, std::uint64_t seed) {
  require(d >= 2 && L >= 1, ErrorKind::kInvalidInput, "symmetric slices need d >= 2 and L >= 1");
  std::vector<Matrix> out(static_cast<std::size_t>(L));
  for (Eigen::Index l = 0; l < L; ++l) {
    GaussianStream g(stream_rng(seed, static_cast<std::uint64_t>(l)));
    while (true) {
      const Matrix p = orthonormal_factor(gaussian_matrix(d, d, g));
      const Vector theta = random_unit_vector(d, g);
      Vector sorted = theta;
      std::sort(sorted.data(), sorted.data() + d);
      if ((sorted.tail(d - 1) - sorted.head(d - 1)).minCoeff() <= 1e-10) continue;
      const Matrix a = p * theta.asDiagonal() * p.transpose();
      out[static_cast<std::size_t>(l)] = 0.5 * (a + a.transpose());
      break;
    }
  }
  return out;
}

inline double coordinate_le_from_log(const Matrix& log_m, const Matrix& a) { return a.cwiseProduct(log_m).sum(); }

inline double coordinate_le(const Matrix& m, const Matrix& a) { return coordinate_le_from_log(spd_log(m), a); }

// Diagonalized slice for the affine-invariant Busemann function.
struct AiSlice {
  Vector values;  // eigenvalues of A, descending
  Matrix basis;   // P with A = P diag(values) P^T
};

inline AiSlice prepare_ai_slice(const Matrix& a) {
  auto e = sym_eig(a);
  for (Eigen::Index k = 0; k + 1 < e.values.size(); ++k)
    require(e.values(k) - e.values(k + 1) > 1e-10, ErrorKind::kDegenerateDirection, "slice has repeated eigenvalues");
  return {e.values, e.vectors};
}

// Diagonal of the UDU factorization M = g D g^T (g unit upper triangular),
// obtained from LDL of the index-reversed matrix.
inline Vector udu_diagonal(const Matrix& m) {
  const Eigen::Index d = m.rows();
  const Matrix r = m.reverse();  // J M J
  Matrix l = Matrix::Identity(d, d);
  Vector dd(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    double s = r(k, k);
    for (Eigen::Index j = 0; j < k; ++j) s -= l(k, j) * l(k, j) * dd(j);
    require(s > 0.0 && std::isfinite(s), ErrorKind::kNotPositiveDefinite, "matrix is not positive definite");
    dd(k) = s;
    for (Eigen::Index i = k + 1; i < d; ++i) {
      double t = r(i, k);
      for (Eigen::Index j = 0; j < k; ++j) t -= l(i, j) * l(k, j) * dd(j);
      l(i, k) = t / s;
    }
  }
  return dd.reverse();
}

inline double busemann_ai(const Matrix& m, const AiSlice& slice) {
  const Matrix mt = slice.basis.transpose() * m * slice.basis;
  const Vector dg = udu_diagonal(0.5 * (mt + mt.transpose()));
  return -slice.values.dot(dg.array().log().matrix());
}

inline double busemann_ai(const Matrix& m, const Matrix& a) { return busemann_ai(m, prepare_ai_slice(a)); }

struct SpdCloud {
  std::vector<Matrix> atoms;
  std::vector<double> weights;

  std::size_t size() const { return atoms.size(); }
  Eigen::Index dim() const { return atoms.empty() ? 0 : atoms.front().rows(); }
};

inline SpdCloud make_spd_cloud(std::vector<Matrix> atoms, std::vector<double> weights = {}) {
  require(!atoms.empty(), ErrorKind::kInvalidInput, "empty SPD cloud");
  if (weights.empty()) weights = uniform_weights(atoms.size());
  require(weights.size() == atoms.size(), ErrorKind::kInvalidInput, "one weight per atom is required");
  validate_weights(weights);
  const Eigen::Index d = atoms.front().rows();
  for (const auto& a : atoms) {
    require(a.rows() == d && a.cols() == d, ErrorKind::kInvalidInput, "atoms differ in size");
    require(is_symmetric(a), ErrorKind::kInvalidInput, "atom is not symmetric");
  }
  return {std::move(atoms), std::move(weights)};
}

inline std::vector<Matrix> log_atoms(const SpdCloud& c) {
  std::vector<Matrix> out(c.size());
  parallel_for(c.size(), [&](std::size_t i) { out[i] = spd_log(c.atoms[i]); });
  return out;
}

namespace detail {

inline void check_spd_pair(const SpdCloud& mu, const SpdCloud& nu) {
  require(mu.dim() == nu.dim(), ErrorKind::kInvalidInput, "SPD clouds differ in matrix size");
  double a = 0, b = 0;
  for (double w : mu.weights) a += w;
  for (double w : nu.weights) b += w;
  require_same_mass(a, b);
}

}  // namespace detail

inline Matrix spd_le_coordinates(const std::vector<Matrix>& logs, const std::vector<Matrix>& slices) {
  Matrix out(static_cast<Eigen::Index>(slices.size()), static_cast<Eigen::Index>(logs.size()));
  for (std::size_t l = 0; l < slices.size(); ++l)
    for (std::size_t i = 0; i < logs.size(); ++i)
      out(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(i)) = coordinate_le_from_log(logs[i], slices[l]);
  return out;
}

inline Matrix spd_ai_coordinates(const SpdCloud& c, const std::vector<AiSlice>& slices) {
  Matrix out(static_cast<Eigen::Index>(slices.size()), static_cast<Eigen::Index>(c.size()));
  parallel_for(slices.size(), [&](std::size_t l) {
    for (std::size_t i = 0; i < c.size(); ++i)
      out(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(i)) = -busemann_ai(c.atoms[i], slices[l]);
  });
  return out;
}

inline double sliced_from_coordinates(const Matrix& src, const std::vector<double>& ws, const Matrix& tgt,
                                      const std::vector<double>& wt, double p) {
  return sliced_mean(src.rows(), [&](Eigen::Index l) {
    const Vector a = src.row(l).transpose(), b = tgt.row(l).transpose();
    return wasserstein_1d(build_profile(std::span<const double>(a.data(), a.size()), ws),
                          build_profile(std::span<const double>(b.data(), b.size()), wt), p);
  });
}

inline SlicedProjections project_spd_le(const SpdCloud& mu, const SpdCloud& nu, const std::vector<Matrix>& slices) {
  detail::check_spd_pair(mu, nu);
  return {spd_le_coordinates(log_atoms(mu), slices), spd_le_coordinates(log_atoms(nu), slices)};
}

inline SlicedProjections project_spd_ai(const SpdCloud& mu, const SpdCloud& nu, const std::vector<Matrix>& slices) {
  detail::check_spd_pair(mu, nu);
  std::vector<AiSlice> prepared;
  prepared.reserve(slices.size());
  for (const auto& a : slices) prepared.push_back(prepare_ai_slice(a));
  return {spd_ai_coordinates(mu, prepared), spd_ai_coordinates(nu, prepared)};
}

inline double spdsw(const SpdCloud& mu, const SpdCloud& nu, const std::vector<Matrix>& slices, double p) {
  const auto proj = project_spd_le(mu, nu, slices);
  return sliced_from_coordinates(proj.source, mu.weights, proj.target, nu.weights, p);
}

inline double hspdsw(const SpdCloud& mu, const SpdCloud& nu, const std::vector<Matrix>& slices, double p) {
  const auto proj = project_spd_ai(mu, nu, slices);
  return sliced_from_coordinates(proj.source, mu.weights, proj.target, nu.weights, p);
}

inline EuclideanCloud log_pushforward(const SpdCloud& c) {
  const auto logs = log_atoms(c);
  const Eigen::Index d = c.dim();
  Matrix pts(static_cast<Eigen::Index>(c.size()), d * (d + 1) / 2);
  for (std::size_t i = 0; i < c.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) = sym_vec(logs[i]).transpose();
  return make_cloud(pts, c.weights);
}

// Euclidean SW on the vectorized matrix logarithms; dirs live in R^{d(d+1)/2}.
inline double logsw(const SpdCloud& mu, const SpdCloud& nu, const DirectionSet& dirs, double p) {
  detail::check_spd_pair(mu, nu);
  return sw_p(log_pushforward(mu), log_pushforward(nu), dirs, p);
}

struct QuantileFeatures {
  Matrix values;  // M x L
  std::vector<double> grid;
};

inline QuantileFeatures kernel_features(const SpdCloud& mu, const std::vector<Matrix>& slices, Eigen::Index M) {
  require(M >= 1, ErrorKind::kInvalidInput, "quantile grid needs at least one level");
  require(!slices.empty(), ErrorKind::kInvalidInput, "no slices");
  const Matrix coords = spd_le_coordinates(log_atoms(mu), slices);
  const auto L = static_cast<Eigen::Index>(slices.size());
  QuantileFeatures out{Matrix(M, L), std::vector<double>(static_cast<std::size_t>(M))};
  for (Eigen::Index j = 0; j < M; ++j) out.grid[static_cast<std::size_t>(j)] = (j + 0.5) / static_cast<double>(M);
  const double scale = 1.0 / std::sqrt(static_cast<double>(M * L));
  for (Eigen::Index l = 0; l < L; ++l) {
    const Vector c = coords.row(l).transpose();
    const auto prof = build_profile(std::span<const double>(c.data(), c.size()), mu.weights);
    for (Eigen::Index j = 0; j < M; ++j) out.values(j, l) = quantile(prof, out.grid[static_cast<std::size_t>(j)]) * scale;
  }
  return out;
}

inline double gaussian_kernel(const QuantileFeatures& f, const QuantileFeatures& g, double sigma) {
  require(sigma > 0.0, ErrorKind::kInvalidInput, "kernel bandwidth must be positive");
  require(f.values.rows() == g.values.rows() && f.values.cols() == g.values.cols(), ErrorKind::kInvalidInput,
          "feature shapes differ");
  return std::exp(-(f.values - g.values).squaredNorm() / (2.0 * sigma * sigma));
}

}  // namespace msot
