#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "msot/core.hpp"
#include "msot/euclidean.hpp"
#include "msot/measures.hpp"

namespace msot {

enum class HyperbolicModel { kLorentz, kPoincare };

inline double minkowski(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  return -x(0) * y(0) + x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
}

inline bool on_hyperboloid(const Eigen::Ref<const Vector>& x, double tol = 1e-9) {
  return x.size() >= 2 && x(0) > 0.0 && std::abs(minkowski(x, x) + 1.0) <= tol * std::max(1.0, x(0) * x(0));
}

inline Vector lorentz_origin(Eigen::Index d) {
  Vector o = Vector::Zero(d + 1);
  o(0) = 1.0;
  return o;
}

inline Vector lorentz_to_poincare(const Eigen::Ref<const Vector>& x) {
  require(on_hyperboloid(x), ErrorKind::kInvalidInput, "point is not on the hyperboloid");
  return x.tail(x.size() - 1) / (1.0 + x(0));
}

inline Vector poincare_to_lorentz(const Eigen::Ref<const Vector>& x) {
  const double r2 = x.squaredNorm();
  require(r2 < 1.0, ErrorKind::kInvalidInput, "point is outside the Poincare ball");
  Vector out(x.size() + 1);
  out(0) = (1.0 + r2) / (1.0 - r2);
  out.tail(x.size()) = 2.0 * x / (1.0 - r2);
  return out;
}

// Lift onto the hyperboloid by recomputing x0 from the spatial part.
inline Vector renormalize_lorentz(const Eigen::Ref<const Vector>& x) {
  Vector out = x;
  out(0) = std::sqrt(1.0 + x.tail(x.size() - 1).squaredNorm());
  return out;
}

inline double lorentz_distance(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  return std::acosh(std::max(1.0, -minkowski(x, y)));
}

inline double poincare_distance(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  const double num = 2.0 * (x - y).squaredNorm();
  const double den = (1.0 - x.squaredNorm()) * (1.0 - y.squaredNorm());
  return std::acosh(std::max(1.0, 1.0 + num / den));
}

namespace detail {
inline double clamped_atanh(double r) {
  constexpr double kLim = 1.0 - 1e-15;
  return std::atanh(std::clamp(r, -kLim, kLim));
}
}  // namespace detail

// v is the ideal point v~ in S^{d-1}; the tangent direction is [0, v~].
inline double geodesic_coordinate_lorentz(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& v) {
  return detail::clamped_atanh(x.tail(x.size() - 1).dot(v) / x(0));
}

inline double geodesic_coordinate_poincare(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& v) {
  const double c = x.dot(v);
  const double a = 1.0 + x.squaredNorm();
  // Rationalized form of (a - sqrt(a^2 - 4c^2)) / (2c); equals 0 at c = 0.
  const double s = 2.0 * c / (a + std::sqrt(std::max(a * a - 4.0 * c * c, 0.0)));
  return 2.0 * detail::clamped_atanh(s);
}

inline double busemann_lorentz(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& v) {
  return std::log(x(0) - x.tail(x.size() - 1).dot(v));
}

inline double busemann_poincare(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& v) {
  return std::log((v - x).squaredNorm() / (1.0 - x.squaredNorm()));
}

struct HyperbolicCloud {
  HyperbolicModel model = HyperbolicModel::kLorentz;
  Matrix points;  // n x (d+1) for Lorentz, n x d for Poincare
  std::vector<double> weights;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return model == HyperbolicModel::kLorentz ? points.cols() - 1 : points.cols(); }
};

inline HyperbolicCloud make_hyperbolic_cloud(HyperbolicModel model, Matrix points, std::vector<double> weights = {}) {
  require(points.rows() > 0, ErrorKind::kInvalidInput, "empty hyperbolic cloud");
  require(points.allFinite(), ErrorKind::kInvalidInput, "non-finite coordinates");
  if (weights.empty()) weights = uniform_weights(static_cast<std::size_t>(points.rows()));
  require(static_cast<Eigen::Index>(weights.size()) == points.rows(), ErrorKind::kInvalidInput,
          "one weight per point is required");
  validate_weights(weights);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (model == HyperbolicModel::kLorentz)
      require(on_hyperboloid(points.row(i).transpose()), ErrorKind::kInvalidInput, "point is not on the hyperboloid");
    else
      require(points.row(i).squaredNorm() < 1.0, ErrorKind::kInvalidInput, "point is outside the Poincare ball");
  }
  return {model, std::move(points), std::move(weights)};
}

inline HyperbolicCloud to_lorentz(const HyperbolicCloud& c) {
  if (c.model == HyperbolicModel::kLorentz) return c;
  Matrix out(c.size(), c.points.cols() + 1);
  for (Eigen::Index i = 0; i < c.size(); ++i) out.row(i) = poincare_to_lorentz(c.points.row(i).transpose()).transpose();
  return {HyperbolicModel::kLorentz, out, c.weights};
}

inline HyperbolicCloud to_poincare(const HyperbolicCloud& c) {
  if (c.model == HyperbolicModel::kPoincare) return c;
  Matrix out(c.size(), c.points.cols() - 1);
  for (Eigen::Index i = 0; i < c.size(); ++i) out.row(i) = lorentz_to_poincare(c.points.row(i).transpose()).transpose();
  return {HyperbolicModel::kPoincare, out, c.weights};
}

enum class HyperbolicProjection { kGeodesic, kHorospherical };

// Line coordinate used by the sliced distances: the geodesic coordinate, or
// minus the Busemann function so that the ray parameter is recovered.
inline double hyperbolic_line_coordinate(HyperbolicModel model, HyperbolicProjection proj,
                                         const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& v) {
  if (proj == HyperbolicProjection::kGeodesic)
    return model == HyperbolicModel::kLorentz ? geodesic_coordinate_lorentz(x, v) : geodesic_coordinate_poincare(x, v);
  return model == HyperbolicModel::kLorentz ? -busemann_lorentz(x, v) : -busemann_poincare(x, v);
}

inline std::vector<double> project_hyperbolic(const HyperbolicCloud& c, HyperbolicProjection proj,
                                              const Eigen::Ref<const Vector>& v) {
  std::vector<double> out(static_cast<std::size_t>(c.size()));
  for (Eigen::Index i = 0; i < c.size(); ++i)
    out[static_cast<std::size_t>(i)] = hyperbolic_line_coordinate(c.model, proj, c.points.row(i).transpose(), v);
  return out;
}

namespace detail {

// Both clouds in one model: kept as is when they agree, otherwise Lorentz.
inline std::pair<HyperbolicCloud, HyperbolicCloud> common_model(const HyperbolicCloud& mu, const HyperbolicCloud& nu) {
  if (mu.model == nu.model) return {mu, nu};
  return {to_lorentz(mu), to_lorentz(nu)};
}

inline double hyperbolic_sliced(const HyperbolicCloud& mu_in, const HyperbolicCloud& nu_in, const DirectionSet& dirs,
                                double p, HyperbolicProjection proj) {
  const auto [mu, nu] = common_model(mu_in, nu_in);
  require(mu.dim() == nu.dim(), ErrorKind::kInvalidInput, "clouds live in different dimensions");
  require(dirs.dim() == mu.dim(), ErrorKind::kInvalidInput, "directions do not match the dimension");
  double mm = 0, mn = 0;
  for (double w : mu.weights) mm += w;
  for (double w : nu.weights) mn += w;
  require_same_mass(mm, mn);
  return sliced_mean(dirs.count(), [&](Eigen::Index l) {
    const Vector v = dirs.dirs.row(l).transpose();
    return wasserstein_1d(build_profile(project_hyperbolic(mu, proj, v), mu.weights),
                          build_profile(project_hyperbolic(nu, proj, v), nu.weights), p);
  });
}

}  // namespace detail

// Slices are ideal points v~ in S^{d-1}, i.e. sample_directions(d, L, seed).
inline double ghsw(const HyperbolicCloud& mu, const HyperbolicCloud& nu, const DirectionSet& dirs, double p) {
  return detail::hyperbolic_sliced(mu, nu, dirs, p, HyperbolicProjection::kGeodesic);
}

inline double hhsw(const HyperbolicCloud& mu, const HyperbolicCloud& nu, const DirectionSet& dirs, double p) {
  return detail::hyperbolic_sliced(mu, nu, dirs, p, HyperbolicProjection::kHorospherical);
}

inline SlicedProjections project_hyperbolic_pair(const HyperbolicCloud& mu_in, const HyperbolicCloud& nu_in,
                                                 const DirectionSet& dirs, HyperbolicProjection proj) {
  const auto [mu, nu] = detail::common_model(mu_in, nu_in);
  require(dirs.dim() == mu.dim() && mu.dim() == nu.dim(), ErrorKind::kInvalidInput, "dimension mismatch");
  SlicedProjections out{Matrix(dirs.count(), mu.size()), Matrix(dirs.count(), nu.size())};
  for (Eigen::Index l = 0; l < dirs.count(); ++l) {
    const Vector v = dirs.dirs.row(l).transpose();
    const auto a = project_hyperbolic(mu, proj, v);
    const auto b = project_hyperbolic(nu, proj, v);
    for (Eigen::Index i = 0; i < mu.size(); ++i) out.source(l, i) = a[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < nu.size(); ++j) out.target(l, j) = b[static_cast<std::size_t>(j)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Riemannian tools on the hyperboloid.

inline Vector exp_map_lorentz(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& v) {
  const double nv = std::sqrt(std::max(minkowski(v, v), 0.0));
  if (nv < 1e-16) return renormalize_lorentz(x + v);
  return renormalize_lorentz(std::cosh(nv) * x + std::sinh(nv) * v / nv);
}

inline Vector parallel_transport_lorentz(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                                         const Eigen::Ref<const Vector>& v) {
  return v + minkowski(y, v) / (1.0 - minkowski(x, y)) * (x + y);
}

inline Vector riemannian_gradient_lorentz(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& egrad) {
  Vector h = egrad;
  h(0) = -h(0);
  return h + minkowski(x, h) * x;
}

inline Vector riemannian_step_lorentz(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& egrad, double lr) {
  const Vector g = riemannian_gradient_lorentz(x, egrad);
  return exp_map_lorentz(x, -lr * g);
}

inline HyperbolicCloud sample_wrapped_normal(const Eigen::Ref<const Vector>& mean, const Matrix& cov, Eigen::Index n,
                                             std::uint64_t seed) {
  require(on_hyperboloid(mean), ErrorKind::kInvalidInput, "mean is not on the hyperboloid");
  const Eigen::Index d = mean.size() - 1;
  require(cov.rows() == d && cov.cols() == d, ErrorKind::kInvalidInput, "covariance has the wrong shape");
  require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()),
          ErrorKind::kInvalidInput, "covariance is not symmetric");
  Eigen::LLT<Matrix> llt(cov);
  require(llt.info() == Eigen::Success, ErrorKind::kInvalidInput, "covariance is not positive definite");
  const Matrix chol = llt.matrixL();
  const Vector origin = lorentz_origin(d);
  Matrix out(n, d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    GaussianStream g(stream_rng(seed, static_cast<std::uint64_t>(i)));
    Vector z(d);
    for (Eigen::Index k = 0; k < d; ++k) z(k) = g();
    Vector v = Vector::Zero(d + 1);
    v.tail(d) = chol * z;
    const Vector u = parallel_transport_lorentz(origin, mean, v);
    out.row(i) = exp_map_lorentz(mean, u).transpose();
  }
  return {HyperbolicModel::kLorentz, out, uniform_weights(static_cast<std::size_t>(n))};
}

}  // namespace msot
