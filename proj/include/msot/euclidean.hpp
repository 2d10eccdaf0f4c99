#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "msot/core.hpp"
#include "msot/measures.hpp"

namespace msot {

struct EuclideanCloud {
  Matrix points;  // n x d
  std::vector<double> weights;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

inline EuclideanCloud make_cloud(Matrix points, std::vector<double> weights) {
  require(points.rows() > 0 && points.cols() > 0, ErrorKind::kInvalidInput, "empty point cloud");
  require(points.allFinite(), ErrorKind::kInvalidInput, "non-finite coordinates");
  require(static_cast<Eigen::Index>(weights.size()) == points.rows(), ErrorKind::kInvalidInput,
          "one weight per point is required");
  validate_weights(weights);
  return {std::move(points), std::move(weights)};
}

inline EuclideanCloud make_cloud(Matrix points) {
  auto w = uniform_weights(static_cast<std::size_t>(points.rows()));
  return make_cloud(std::move(points), std::move(w));
}

struct DirectionSet {
  Matrix dirs;  // L x d, unit rows
  std::uint64_t seed = 0;

  Eigen::Index count() const { return dirs.rows(); }
  Eigen::Index dim() const { return dirs.cols(); }
};

inline Vector random_unit_vector(Eigen::Index d, GaussianStream& g) {
  Vector z(d);
  double nrm = 0.0;
  do {
    for (Eigen::Index k = 0; k < d; ++k) z(k) = g();
    nrm = z.norm();
  } while (nrm == 0.0);
  return z / nrm;
}

inline DirectionSet sample_directions(Eigen::Index d, Eigen::Index L, std::uint64_t seed) {
  require(d >= 1 && L >= 1, ErrorKind::kInvalidInput, "direction sampling needs d >= 1 and L >= 1");
  DirectionSet out{Matrix(L, d), seed};
  for (Eigen::Index l = 0; l < L; ++l) {
    GaussianStream g(stream_rng(seed, static_cast<std::uint64_t>(l)));
    out.dirs.row(l) = random_unit_vector(d, g).transpose();
  }
  return out;
}

// Mean over slices of a per-slice value, reduced in slice order.
template <class PerSlice>
double sliced_mean(Eigen::Index L, PerSlice&& per_slice) {
  std::vector<double> vals(static_cast<std::size_t>(L));
  parallel_for(vals.size(), [&](std::size_t l) { vals[l] = per_slice(static_cast<Eigen::Index>(l)); });
  return mean_of(vals);
}

inline std::vector<double> project_points(const Matrix& points, const Eigen::Ref<const Eigen::RowVectorXd>& theta) {
  std::vector<double> out(static_cast<std::size_t>(points.rows()));
  Eigen::Map<Vector>(out.data(), points.rows()) = points * theta.transpose();
  return out;
}

inline void check_pair(const EuclideanCloud& mu, const EuclideanCloud& nu, const DirectionSet& dirs) {
  require(mu.dim() == nu.dim(), ErrorKind::kInvalidInput, "clouds live in different dimensions");
  require(dirs.dim() == mu.dim(), ErrorKind::kInvalidInput, "directions do not match the ambient dimension");
  require(dirs.count() > 0, ErrorKind::kInvalidInput, "no directions");
}

inline double sw_p(const EuclideanCloud& mu, const EuclideanCloud& nu, const DirectionSet& dirs, double p) {
  check_pair(mu, nu, dirs);
  double mm = 0, mn = 0;
  for (double w : mu.weights) mm += w;
  for (double w : nu.weights) mn += w;
  require_same_mass(mm, mn);
  return sliced_mean(dirs.count(), [&](Eigen::Index l) {
    const auto px = project_points(mu.points, dirs.dirs.row(l));
    const auto py = project_points(nu.points, dirs.dirs.row(l));
    return wasserstein_1d(build_profile(px, mu.weights), build_profile(py, nu.weights), p);
  });
}

// Gradient of sw_p(., nu, dirs, 2) with respect to the atom positions of mu,
// valid wherever the projections are pairwise distinct.
inline Matrix sw2_subgradient(const EuclideanCloud& mu, const EuclideanCloud& nu, const DirectionSet& dirs) {
  check_pair(mu, nu, dirs);
  require(mu.size() == nu.size(), ErrorKind::kUnsupported, "subgradient needs equal atom counts");
  require(weights_uniform(mu.weights) && weights_uniform(nu.weights), ErrorKind::kUnsupported,
          "subgradient needs uniform weights");
  const Eigen::Index n = mu.size(), L = dirs.count();
  std::vector<Vector> coef(static_cast<std::size_t>(L));
  parallel_for(coef.size(), [&](std::size_t l) {
    const auto px = project_points(mu.points, dirs.dirs.row(static_cast<Eigen::Index>(l)));
    const auto py = project_points(nu.points, dirs.dirs.row(static_cast<Eigen::Index>(l)));
    const auto sx = build_profile(px), sy = build_profile(py);
    Vector c(n);
    for (Eigen::Index k = 0; k < n; ++k) c(static_cast<Eigen::Index>(sx.order[k])) = sx.positions[k] - sy.positions[k];
    coef[l] = c;
  });
  Matrix grad = Matrix::Zero(n, mu.dim());
  const double scale = 2.0 / static_cast<double>(n * L);
  for (Eigen::Index l = 0; l < L; ++l) grad += scale * coef[static_cast<std::size_t>(l)] * dirs.dirs.row(l);
  return grad;
}

// Projected coordinates of two measures on a common slice set: the input of
// every unbalanced sliced solver.
struct SlicedProjections {
  Matrix source;  // L x n
  Matrix target;  // L x m

  Eigen::Index slices() const { return source.rows(); }
};

inline SlicedProjections project_euclidean(const EuclideanCloud& mu, const EuclideanCloud& nu, const DirectionSet& dirs) {
  check_pair(mu, nu, dirs);
  return {dirs.dirs * mu.points.transpose(), dirs.dirs * nu.points.transpose()};
}

}  // namespace msot
