#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "msot/core.hpp"
#include "msot/linalg.hpp"
#include "msot/measures.hpp"

namespace msot {

// ---------------------------------------------------------------------------
// One-dimensional rays through quantile functions.

struct QuantilePiece {
  double lo;  // level interval [lo, lo + len)
  double len;
  std::vector<double> values;  // one quantile value per profile
};

// Common refinement of the quantile functions of probability profiles.
inline std::vector<QuantilePiece> merged_quantile_pieces(const std::vector<const SortedProfile*>& profs) {
  for (const auto* p : profs) {
    require(p->size() > 0, ErrorKind::kInvalidInput, "empty profile");
    require(std::abs(p->mass() - 1.0) <= kMassTol, ErrorKind::kInvalidInput, "profile is not a probability measure");
  }
  std::vector<QuantilePiece> out;
  std::vector<std::size_t> idx(profs.size(), 0);
  double prev = 0.0;
  while (true) {
    double next = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < profs.size(); ++k) next = std::min(next, profs[k]->cum[idx[k]]);
    if (next > prev) {
      QuantilePiece piece{prev, next - prev, std::vector<double>(profs.size())};
      for (std::size_t k = 0; k < profs.size(); ++k) piece.values[k] = profs[k]->positions[idx[k]];
      out.push_back(std::move(piece));
      prev = next;
    }
    bool done = false;
    for (std::size_t k = 0; k < profs.size(); ++k) {
      if (profs[k]->cum[idx[k]] <= next) ++idx[k];
      if (idx[k] == profs[k]->size()) done = true;
    }
    if (done) break;
  }
  return out;
}

struct RayCheck {
  bool is_ray = true;
  // First violating pair of quantile levels (u_a < u_b with d(u_a) > d(u_b)).
  double u_a = 0.0;
  double u_b = 0.0;
};

// mu0 -> mu1 extends to a ray iff F1^{-1} - F0^{-1} is nondecreasing.
inline RayCheck is_geodesic_ray_1d(const SortedProfile& mu0, const SortedProfile& mu1) {
  const auto pieces = merged_quantile_pieces({&mu0, &mu1});
  RayCheck out;
  for (std::size_t k = 1; k < pieces.size(); ++k) {
    const double a = pieces[k - 1].values[1] - pieces[k - 1].values[0];
    const double b = pieces[k].values[1] - pieces[k].values[0];
    if (a > b + 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) {
      out = {false, pieces[k - 1].lo, pieces[k].lo};
      break;
    }
  }
  return out;
}

struct QuantileRay {
  SortedProfile q0;
  SortedProfile q1;
};

inline QuantileRay make_quantile_ray(SortedProfile mu0, SortedProfile mu1) {
  const auto check = is_geodesic_ray_1d(mu0, mu1);
  require(check.is_ray, ErrorKind::kNotARay, "quantile difference decreases between levels " + std::to_string(check.u_a) +
                                                 " and " + std::to_string(check.u_b));
  require(std::abs(wasserstein_1d(mu0, mu1, 2.0) - 1.0) <= 1e-8, ErrorKind::kInvalidInput,
          "ray is not unit speed: W2^2(mu0, mu1) must be 1");
  return {std::move(mu0), std::move(mu1)};
}

// Rescales mu0 -> mu1 to unit speed along the same direction.
inline QuantileRay make_unit_quantile_ray(const SortedProfile& mu0, const SortedProfile& mu1) {
  const double w2 = std::sqrt(wasserstein_1d(mu0, mu1, 2.0));
  require(w2 > 0.0, ErrorKind::kInvalidInput, "ray endpoints coincide");
  std::vector<double> pos, w;
  for (const auto& p : merged_quantile_pieces({&mu0, &mu1})) {
    pos.push_back(p.values[0] + (p.values[1] - p.values[0]) / w2);
    w.push_back(p.len);
  }
  return make_quantile_ray(mu0, build_profile(pos, w));
}

// B(nu) = -<F1^{-1} - F0^{-1}, Fnu^{-1} - F0^{-1}> in L^2([0,1]).
inline double busemann_w1d(const QuantileRay& ray, const SortedProfile& nu) {
  double s = 0.0;
  for (const auto& p : merged_quantile_pieces({&ray.q0, &ray.q1, &nu}))
    s += p.len * (p.values[1] - p.values[0]) * (p.values[2] - p.values[0]);
  return -s;
}

// Lower end of the interval on which q0 + t (q1 - q0) stays nondecreasing.
inline double ray_domain_lower(const QuantileRay& ray) {
  const auto pieces = merged_quantile_pieces({&ray.q0, &ray.q1});
  double lo = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < pieces.size(); ++k) {
    const double dq0 = pieces[k].values[0] - pieces[k - 1].values[0];
    const double dd = (pieces[k].values[1] - pieces[k].values[0]) - (pieces[k - 1].values[1] - pieces[k - 1].values[0]);
    if (dd > 0.0) lo = std::max(lo, -dq0 / dd);
  }
  return lo;
}

// The measure at time t: quantile function q0 + t (q1 - q0).
inline SortedProfile ray_point(const QuantileRay& ray, double t) {
  require(t >= ray_domain_lower(ray) - 1e-12, ErrorKind::kInvalidInput, "time lies outside the ray domain");
  std::vector<double> pos, w;
  for (const auto& p : merged_quantile_pieces({&ray.q0, &ray.q1})) {
    pos.push_back(p.values[0] + t * (p.values[1] - p.values[0]));
    w.push_back(p.len);
  }
  return build_profile(pos, w);
}

struct QuantileRayProjection {
  double t;
  bool clipped;
};

inline QuantileRayProjection project_on_ray(const QuantileRay& ray, const SortedProfile& nu) {
  const double t = -busemann_w1d(ray, nu);
  const double lo = ray_domain_lower(ray);
  if (t < lo) return {lo, true};
  return {t, false};
}

// ---------------------------------------------------------------------------
// One-dimensional Gaussians N(m, s^2) in the (m, s) chart.

struct GaussianRay {
  double m0, s0, m1, s1;
};

inline GaussianRay make_gaussian_ray(double m0, double s0, double m1, double s1) {
  require(s0 > 0.0 && std::isfinite(m0) && std::isfinite(m1) && std::isfinite(s1), ErrorKind::kInvalidInput,
          "Gaussian ray needs s0 > 0 and finite parameters");
  require(s1 >= s0, ErrorKind::kNotARay, "a Gaussian ray needs s1 >= s0");
  require(std::abs((m1 - m0) * (m1 - m0) + (s1 - s0) * (s1 - s0) - 1.0) <= 1e-10, ErrorKind::kInvalidInput,
          "Gaussian ray is not unit speed");
  return {m0, s0, m1, s1};
}

// Unit-speed ray from (m0, s0) with direction angle phi in [0, pi].
inline GaussianRay gaussian_ray_from_angle(double m0, double s0, double phi) {
  return make_gaussian_ray(m0, s0, m0 + std::cos(phi), s0 + std::max(std::sin(phi), 0.0));
}

inline double busemann_gaussian1d(const GaussianRay& r, double m, double s) {
  require(s > 0.0, ErrorKind::kInvalidInput, "standard deviation must be positive");
  return -(r.m1 - r.m0) * (m - r.m0) - (r.s1 - r.s0) * (s - r.s0);
}

struct RayDomain {
  double lo;
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double t) const { return t >= lo && t <= hi; }
};

inline RayDomain ray_domain_gaussian1d(const GaussianRay& r) {
  if (r.s1 == r.s0) return {-std::numeric_limits<double>::infinity()};
  return {-r.s0 / (r.s1 - r.s0)};
}

struct GaussianProjection {
  double t;
  bool clipped;
  double m;  // parameters of the ray point at t
  double s;
};

inline GaussianProjection project_on_ray(const GaussianRay& r, double m, double s) {
  double t = -busemann_gaussian1d(r, m, s);
  const auto dom = ray_domain_gaussian1d(r);
  const bool clipped = !dom.contains(t);
  if (clipped) t = dom.lo;
  return {t, clipped, r.m0 + t * (r.m1 - r.m0), r.s0 + t * (r.s1 - r.s0)};
}

struct GaussianPca {
  GaussianRay first;
  GaussianRay second;
  double theta;      // doubled angle of the first direction, in [0, 2 pi)
  Eigen::Matrix2d M;  // covariance of the centered (m, s) coordinates
  std::vector<double> scores_first;
  std::vector<double> scores_second;
};

// First two principal geodesic rays of a set of 1D Gaussians from the origin
// (m0, s0). The direction (cos(theta/2), sin(theta/2)) is the top eigenvector
// of M taken in the half-plane s >= s0; atan2 keeps the sign of M12.
inline GaussianPca gaussian_pca_1d(const std::vector<std::pair<double, double>>& data, double m0, double s0) {
  require(!data.empty(), ErrorKind::kInvalidInput, "no data");
  require(s0 > 0.0, ErrorKind::kInvalidInput, "origin needs s0 > 0");
  const auto n = static_cast<double>(data.size());
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
  for (const auto& [m, s] : data) {
    require(s > 0.0 && std::isfinite(m) && std::isfinite(s), ErrorKind::kInvalidInput, "data needs finite m and s > 0");
    const Eigen::Vector2d x(m - m0, s - s0);
    mean += x / n;
    second += x * x.transpose() / n;
  }
  const Eigen::Matrix2d M = second - mean * mean.transpose();
  require(M.cwiseAbs().maxCoeff() > 0.0, ErrorKind::kDegenerateData, "all data points coincide");
  double theta, c, sn;  // cos(theta), sin(theta)
  if (M(0, 1) == 0.0 && M(0, 0) == M(1, 1)) {
    theta = std::numbers::pi / 2.0;  // isotropic: every direction is optimal
    c = 0.0;
    sn = 1.0;
  } else {
    const double r = std::hypot(M(0, 0) - M(1, 1), 2.0 * M(0, 1));
    c = (M(0, 0) - M(1, 1)) / r;
    sn = 2.0 * M(0, 1) / r;
    theta = std::atan2(sn, c);
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  }
  // Half-angle formulas keep the axis-aligned cases exact.
  const bool upper = theta < std::numbers::pi;
  const double ch = (upper ? 1.0 : -1.0) * std::sqrt(std::max(0.0, 0.5 * (1.0 + c)));
  const double sh = std::sqrt(std::max(0.0, 0.5 * (1.0 - c)));
  const double u2 = upper ? -sh : sh, v2 = upper ? ch : -ch;
  GaussianPca out{make_gaussian_ray(m0, s0, m0 + ch, s0 + sh), make_gaussian_ray(m0, s0, m0 + u2, s0 + v2), theta, M,
                  {}, {}};
  for (const auto& [m, s] : data) {
    out.scores_first.push_back(-busemann_gaussian1d(out.first, m, s));
    out.scores_second.push_back(-busemann_gaussian1d(out.second, m, s));
  }
  return out;
}

// Wasserstein barycenter of 1D Gaussians: averaged means and deviations.
inline std::pair<double, double> gaussian_barycenter_1d(const std::vector<std::pair<double, double>>& data) {
  require(!data.empty(), ErrorKind::kInvalidInput, "no data");
  double m = 0.0, s = 0.0;
  for (const auto& [a, b] : data) {
    m += a;
    s += b;
  }
  return {m / static_cast<double>(data.size()), s / static_cast<double>(data.size())};
}

// ---------------------------------------------------------------------------
// Bures-Wasserstein Gaussians N(m, Sigma).

struct BWGaussian {
  Vector m;
  Matrix Sigma;
};

inline BWGaussian make_bw_gaussian(Vector m, Matrix sigma) {
  require(sigma.rows() == m.size() && sigma.cols() == m.size() && m.size() > 0, ErrorKind::kInvalidInput,
          "mean and covariance sizes differ");
  require(is_symmetric(sigma), ErrorKind::kInvalidInput, "covariance is not symmetric");
  require_spd_values(sym_eig(sigma).values, "covariance");
  return {std::move(m), std::move(sigma)};
}

inline double bw_distance_sq(const BWGaussian& a, const BWGaussian& b) {
  require(a.m.size() == b.m.size(), ErrorKind::kInvalidInput, "Gaussians differ in dimension");
  const Matrix r = psd_sqrt(a.Sigma);
  return (a.m - b.m).squaredNorm() + a.Sigma.trace() + b.Sigma.trace() - 2.0 * psd_sqrt(r * b.Sigma * r).trace();
}

struct BWRay {
  BWGaussian mu0;
  BWGaussian mu1;
  Matrix A;  // Monge map mu0 -> mu1 is x -> m1 + A (x - m0)
};

inline BWRay make_bw_ray(BWGaussian mu0, BWGaussian mu1) {
  require(mu0.m.size() == mu1.m.size(), ErrorKind::kInvalidInput, "Gaussians differ in dimension");
  const Matrix r = psd_sqrt(mu0.Sigma), ri = spd_pow(mu0.Sigma, -0.5);
  const Matrix mid = psd_sqrt(r * mu1.Sigma * r);
  const Matrix gap = mid - mu0.Sigma;
  require(sym_eig(0.5 * (gap + gap.transpose())).values.minCoeff() >= -1e-9, ErrorKind::kNotARay,
          "(S0^1/2 S1 S0^1/2)^1/2 - S0 is not positive semidefinite");
  require(std::abs(bw_distance_sq(mu0, mu1) - 1.0) <= 1e-8, ErrorKind::kInvalidInput, "ray is not unit speed");
  Matrix a = ri * mid * ri;
  a = 0.5 * (a + a.transpose()).eval();
  return {std::move(mu0), std::move(mu1), std::move(a)};
}

inline double busemann_bw(const BWRay& ray, const BWGaussian& nu) {
  require(nu.m.size() == ray.mu0.m.size(), ErrorKind::kInvalidInput, "Gaussian dimension does not match the ray");
  const Matrix& s0 = ray.mu0.Sigma;
  const Matrix& a = ray.A;
  const Eigen::Index d = s0.rows();
  const Matrix inner = s0 - s0 * a - a * s0 + ray.mu1.Sigma;
  const Matrix r = psd_sqrt(nu.Sigma);
  Matrix k = r * inner * r;
  k = 0.5 * (k + k.transpose()).eval();
  return -(ray.mu1.m - ray.mu0.m).dot(nu.m - ray.mu0.m) + (s0 * (a - Matrix::Identity(d, d))).trace() - psd_sqrt(k).trace();
}

// Point at time t >= 0 on the ray: mean m0 + t (m1 - m0), covariance
// ((1 - t) I + t A) S0 ((1 - t) I + t A).
inline BWGaussian bw_ray_point(const BWRay& ray, double t) {
  const Eigen::Index d = ray.A.rows();
  const Matrix g = (1.0 - t) * Matrix::Identity(d, d) + t * ray.A;
  Matrix s = g * ray.mu0.Sigma * g;
  s = 0.5 * (s + s.transpose()).eval();
  return {ray.mu0.m + t * (ray.mu1.m - ray.mu0.m), s};
}

}  // namespace msot
