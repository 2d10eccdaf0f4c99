#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "msot/core.hpp"
#include "msot/euclidean.hpp"
#include "msot/linalg.hpp"
#include "msot/measures.hpp"

namespace msot {

struct SphereCloud {
  Matrix points;  // n x d, unit rows
  std::vector<double> weights;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

inline SphereCloud make_sphere_cloud(Matrix points, std::vector<double> weights = {}) {
  require(points.rows() > 0 && points.cols() >= 3, ErrorKind::kInvalidInput, "sphere clouds need d >= 3 coordinates");
  require(points.allFinite(), ErrorKind::kInvalidInput, "non-finite coordinates");
  if (weights.empty()) weights = uniform_weights(static_cast<std::size_t>(points.rows()));
  require(static_cast<Eigen::Index>(weights.size()) == points.rows(), ErrorKind::kInvalidInput,
          "one weight per point is required");
  validate_weights(weights);
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    require(std::abs(points.row(i).norm() - 1.0) <= 1e-12, ErrorKind::kInvalidInput, "point is not on the unit sphere");
  return {std::move(points), std::move(weights)};
}

// Frames U (d x 2) with orthonormal columns.
inline std::vector<Matrix> sample_stiefel(Eigen::Index d, Eigen::Index L, std::uint64_t seed) {
  require(d >= 3, ErrorKind::kInvalidInput, "Stiefel frames need d >= 3");
  require(L >= 1, ErrorKind::kInvalidInput, "need at least one frame");
  std::vector<Matrix> out(static_cast<std::size_t>(L));
  for (Eigen::Index l = 0; l < L; ++l) {
    GaussianStream g(stream_rng(seed, static_cast<std::uint64_t>(l)));
    out[static_cast<std::size_t>(l)] = orthonormal_factor(gaussian_matrix(d, 2, g));
  }
  return out;
}

struct CircleProjection {
  Eigen::Vector2d z;
  double angle;
};

inline CircleProjection project_circle(const Eigen::Ref<const Vector>& x, const Matrix& u) {
  const Eigen::Vector2d c = u.transpose() * x;
  const double nrm = c.norm();
  require(nrm > 1e-12, ErrorKind::kMeasureZeroProjection, "point is orthogonal to the frame");
  const Eigen::Vector2d z = c / nrm;
  double angle = (std::numbers::pi + std::atan2(-z(1), -z(0))) / (2.0 * std::numbers::pi);
  if (angle >= 1.0) angle = 0.0;
  return {z, angle};
}

inline std::vector<double> project_sphere(const SphereCloud& c, const Matrix& u) {
  std::vector<double> out(static_cast<std::size_t>(c.size()));
  for (Eigen::Index i = 0; i < c.size(); ++i)
    out[static_cast<std::size_t>(i)] = project_circle(c.points.row(i).transpose(), u).angle;
  return out;
}

enum class CircleSolver { kAuto, kBinarySearch, kLevelMedian };

inline double ssw(const SphereCloud& mu, const SphereCloud& nu, const std::vector<Matrix>& frames, double p,
                  double eps = 1e-6, CircleSolver solver = CircleSolver::kAuto) {
  require(mu.dim() == nu.dim(), ErrorKind::kInvalidInput, "clouds live on different spheres");
  require(!frames.empty(), ErrorKind::kInvalidInput, "no frames");
  require(frames.front().rows() == mu.dim(), ErrorKind::kInvalidInput, "frames do not match the dimension");
  double a = 0, b = 0;
  for (double w : mu.weights) a += w;
  for (double w : nu.weights) b += w;
  require_same_mass(a, b);
  const bool level_median = solver == CircleSolver::kLevelMedian || (solver == CircleSolver::kAuto && p == 1.0);
  require(!level_median || p == 1.0, ErrorKind::kUnsupported, "the level-median solver is for p = 1");
  return sliced_mean(static_cast<Eigen::Index>(frames.size()), [&](Eigen::Index l) {
    const Matrix& u = frames[static_cast<std::size_t>(l)];
    const auto pm = build_circle_profile(project_sphere(mu, u), mu.weights);
    const auto pn = build_circle_profile(project_sphere(nu, u), nu.weights);
    return level_median ? circle_w1_level_median(pm, pn) : circle_wp_binary_search(pm, pn, p, eps);
  });
}

inline double ssw2_vs_uniform(const SphereCloud& mu, const std::vector<Matrix>& frames) {
  require(!frames.empty(), ErrorKind::kInvalidInput, "no frames");
  validate_probability(mu.weights);
  return sliced_mean(static_cast<Eigen::Index>(frames.size()), [&](Eigen::Index l) {
    return circle_w2_vs_uniform(build_circle_profile(project_sphere(mu, frames[static_cast<std::size_t>(l)]), mu.weights));
  });
}

}  // namespace msot
