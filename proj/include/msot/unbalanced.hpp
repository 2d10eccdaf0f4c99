#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "msot/core.hpp"
#include "msot/euclidean.hpp"
#include "msot/measures.hpp"

namespace msot {

// Conjugate of the KL entropy with strength rho.
inline double phi_conj(double x, double rho) { return -rho * std::expm1(-x / rho); }

struct ReweightedPair {
  std::vector<double> source;
  std::vector<double> target;
};

inline std::vector<double> reweight(std::span<const double> base, std::span<const double> pot, double rho) {
  require(base.size() == pot.size(), ErrorKind::kInvalidInput, "potential and weight sizes differ");
  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] * std::exp(-pot[i] / rho);
  return out;
}

inline ReweightedPair norm_reweight(std::span<const double> mu_w, std::span<const double> nu_w, const DualPotentials& pot,
                                   double rho1, double rho2) {
  return {reweight(mu_w, pot.f, rho1), reweight(nu_w, pot.g, rho2)};
}

// Balanced oracle on one slice: monotone coupling and its potentials.
inline DualPotentials sliced_dual(const SortedProfile& mu, const SortedProfile& nu, double p) {
  return dual_potentials_1d(mu, nu, p);
}

namespace detail {

// log sum_i w_i exp(-f_i / rho), skipping zero weights.
inline double log_mass(std::span<const double> w, std::span<const double> f, double rho) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) mx = std::max(mx, std::log(w[i]) - f[i] / rho);
  require(std::isfinite(mx), ErrorKind::kInvalidInput, "measure has zero total mass");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) s += std::exp(std::log(w[i]) - f[i] / rho - mx);
  return mx + std::log(s);
}

// Reweighted measure scaled to unit mass; the balanced oracle is invariant
// to a common rescaling of both sides, so this is the mass-matching step.
inline std::vector<double> normalized_reweight(std::span<const double> w, std::span<const double> f, double rho) {
  const double lm = log_mass(w, f, rho);
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] > 0.0 ? std::exp(std::log(w[i]) - f[i] / rho - lm) : 0.0;
  return out;
}

}  // namespace detail

inline double fw_translation(std::span<const double> mu_w, std::span<const double> nu_w, std::span<const double> f,
                             std::span<const double> g, double rho1, double rho2) {
  return rho1 * rho2 / (rho1 + rho2) * (detail::log_mass(mu_w, f, rho1) - detail::log_mass(nu_w, g, rho2));
}

enum class FwStep { kLineSearch, kStandard };

struct UnbalancedParams {
  double rho1 = 1.0;
  double rho2 = 1.0;
  double p = 2.0;
  int iterations = 20;
  double eps = 1e-10;
  FwStep step = FwStep::kLineSearch;
};

inline void validate(const UnbalancedParams& prm) {
  require(prm.rho1 > 0.0 && prm.rho2 > 0.0, ErrorKind::kInvalidInput, "rho1 and rho2 must be positive");
  require(prm.p >= 1.0, ErrorKind::kInvalidInput, "order p must be >= 1");
  require(prm.iterations >= 1, ErrorKind::kInvalidInput, "at least one Frank-Wolfe round is required");
  require(prm.eps >= 0.0, ErrorKind::kInvalidInput, "eps must be nonnegative");
}

// Dual objective <mu, phi1(f)> + <nu, phi2(g)>.
inline double unbalanced_dual_value(std::span<const double> mu_w, std::span<const double> nu_w, const DualPotentials& pot,
                                    double rho1, double rho2) {
  double v = 0.0;
  for (std::size_t i = 0; i < mu_w.size(); ++i) v += mu_w[i] * phi_conj(pot.f[i], rho1);
  for (std::size_t j = 0; j < nu_w.size(); ++j) v += nu_w[j] * phi_conj(pot.g[j], rho2);
  return v;
}

namespace detail {

inline void translate(DualPotentials& pot, double lambda) {
  for (double& v : pot.f) v += lambda;
  for (double& v : pot.g) v -= lambda;
}

inline DualPotentials blend(const DualPotentials& a, const DualPotentials& b, double gamma) {
  DualPotentials out{a.f, a.g};
  for (std::size_t i = 0; i < out.f.size(); ++i) out.f[i] += gamma * (b.f[i] - a.f[i]);
  for (std::size_t j = 0; j < out.g.size(); ++j) out.g[j] += gamma * (b.g[j] - a.g[j]);
  return out;
}

// Exact maximization of the concave dual along the segment [a, b].
inline double line_search(std::span<const double> mu_w, std::span<const double> nu_w, const DualPotentials& a,
                          const DualPotentials& b, double rho1, double rho2) {
  auto slope = [&](double gamma) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu_w.size(); ++i) {
      const double d = b.f[i] - a.f[i];
      s += mu_w[i] * std::exp(-(a.f[i] + gamma * d) / rho1) * d;
    }
    for (std::size_t j = 0; j < nu_w.size(); ++j) {
      const double d = b.g[j] - a.g[j];
      s += nu_w[j] * std::exp(-(a.g[j] + gamma * d) / rho2) * d;
    }
    return s;
  };
  if (slope(0.0) <= 0.0) return 0.0;
  if (slope(1.0) >= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// One Frank-Wolfe round on a potential pair. The oracle receives the
// normalized reweighted marginals and returns the balanced dual direction.
template <class Oracle>
double fw_round(DualPotentials& pot, std::span<const double> mu_w, std::span<const double> nu_w,
                const UnbalancedParams& prm, int round, Oracle&& oracle) {
  translate(pot, fw_translation(mu_w, nu_w, pot.f, pot.g, prm.rho1, prm.rho2));
  const auto a = normalized_reweight(mu_w, pot.f, prm.rho1);
  const auto b = normalized_reweight(nu_w, pot.g, prm.rho2);
  // The oracle fixes its gauge arbitrarily; shift the direction to its best
  // translate so the update does not depend on which side was gauged.
  DualPotentials dir = oracle(a, b);
  translate(dir, fw_translation(mu_w, nu_w, dir.f, dir.g, prm.rho1, prm.rho2));
  const double gamma = prm.step == FwStep::kLineSearch ? line_search(mu_w, nu_w, pot, dir, prm.rho1, prm.rho2)
                                                       : 2.0 / (static_cast<double>(round) + 3.0);
  pot = blend(pot, dir, gamma);
  translate(pot, fw_translation(mu_w, nu_w, pot.f, pot.g, prm.rho1, prm.rho2));
  return unbalanced_dual_value(mu_w, nu_w, pot, prm.rho1, prm.rho2);
}

inline void check_projection_shapes(const SlicedProjections& proj, std::size_t n, std::size_t m) {
  require(proj.source.rows() == proj.target.rows() && proj.source.rows() > 0, ErrorKind::kInvalidInput,
          "projections need the same positive number of slices");
  require(static_cast<std::size_t>(proj.source.cols()) == n && static_cast<std::size_t>(proj.target.cols()) == m,
          ErrorKind::kInvalidInput, "projections do not match the weight vectors");
}

inline std::vector<double> row(const Matrix& m, Eigen::Index l) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.cols(); ++i) out[static_cast<std::size_t>(i)] = m(l, i);
  return out;
}

}  // namespace detail

struct SuotResult {
  double value = 0.0;
  std::vector<DualPotentials> potentials;  // one pair per slice
  std::vector<double> trace;               // slice-averaged dual value after each round
};

inline SuotResult suot(const SlicedProjections& proj, const std::vector<double>& mu_w, const std::vector<double>& nu_w,
                       const UnbalancedParams& prm) {
  validate(prm);
  validate_weights(mu_w);
  validate_weights(nu_w);
  detail::check_projection_shapes(proj, mu_w.size(), nu_w.size());
  const auto L = static_cast<std::size_t>(proj.slices());
  SuotResult out;
  out.potentials.assign(L, DualPotentials{std::vector<double>(mu_w.size(), 0.0), std::vector<double>(nu_w.size(), 0.0)});
  std::vector<std::vector<double>> traces(L);
  parallel_for(L, [&](std::size_t l) {
    const auto xs = detail::row(proj.source, static_cast<Eigen::Index>(l));
    const auto ys = detail::row(proj.target, static_cast<Eigen::Index>(l));
    auto oracle = [&](const std::vector<double>& a, const std::vector<double>& b) {
      return sliced_dual(build_profile(xs, a), build_profile(ys, b), prm.p);
    };
    DualPotentials& pot = out.potentials[l];
    double prev = unbalanced_dual_value(mu_w, nu_w, pot, prm.rho1, prm.rho2);
    for (int t = 0; t < prm.iterations; ++t) {
      const double v = detail::fw_round(pot, mu_w, nu_w, prm, t, oracle);
      traces[l].push_back(v);
      if (prm.step == FwStep::kLineSearch && v - prev < prm.eps) break;
      prev = v;
    }
  });
  out.trace.assign(static_cast<std::size_t>(prm.iterations), 0.0);
  for (std::size_t t = 0; t < out.trace.size(); ++t) {
    for (const auto& tr : traces) out.trace[t] += (t < tr.size() ? tr[t] : tr.back()) / static_cast<double>(L);
  }
  std::vector<double> finals(L);
  for (std::size_t l = 0; l < L; ++l)
    finals[l] = unbalanced_dual_value(mu_w, nu_w, out.potentials[l], prm.rho1, prm.rho2);
  out.value = mean_of(finals);
  return out;
}

struct UswResult {
  double value = 0.0;
  DualPotentials potentials;  // on the original atoms
  ReweightedPair marginals;
  std::vector<double> trace;
};

// Unbalanced sliced Wasserstein with a global potential pair. The projection
// source is called once per round; returning the same slices every round
// gives the deterministic variant, fresh slices the stochastic one.
inline UswResult usw(const std::function<SlicedProjections(int)>& projections, const std::vector<double>& mu_w,
                     const std::vector<double>& nu_w, const UnbalancedParams& prm) {
  validate(prm);
  validate_weights(mu_w);
  validate_weights(nu_w);
  UswResult out;
  out.potentials = {std::vector<double>(mu_w.size(), 0.0), std::vector<double>(nu_w.size(), 0.0)};
  double prev = unbalanced_dual_value(mu_w, nu_w, out.potentials, prm.rho1, prm.rho2);
  for (int t = 0; t < prm.iterations; ++t) {
    const SlicedProjections proj = projections(t);
    detail::check_projection_shapes(proj, mu_w.size(), nu_w.size());
    const auto L = static_cast<std::size_t>(proj.slices());
    auto oracle = [&](const std::vector<double>& a, const std::vector<double>& b) {
      std::vector<DualPotentials> per(L);
      parallel_for(L, [&](std::size_t l) {
        per[l] = sliced_dual(build_profile(detail::row(proj.source, static_cast<Eigen::Index>(l)), a),
                             build_profile(detail::row(proj.target, static_cast<Eigen::Index>(l)), b), prm.p);
      });
      DualPotentials avg{std::vector<double>(mu_w.size(), 0.0), std::vector<double>(nu_w.size(), 0.0)};
      for (const auto& d : per) {
        for (std::size_t i = 0; i < avg.f.size(); ++i) avg.f[i] += d.f[i] / static_cast<double>(L);
        for (std::size_t j = 0; j < avg.g.size(); ++j) avg.g[j] += d.g[j] / static_cast<double>(L);
      }
      return avg;
    };
    const double v = detail::fw_round(out.potentials, mu_w, nu_w, prm, t, oracle);
    out.trace.push_back(v);
    if (prm.step == FwStep::kLineSearch && v - prev < prm.eps) break;
    prev = v;
  }
  out.value = unbalanced_dual_value(mu_w, nu_w, out.potentials, prm.rho1, prm.rho2);
  out.marginals = norm_reweight(mu_w, nu_w, out.potentials, prm.rho1, prm.rho2);
  return out;
}

inline UswResult usw(const SlicedProjections& proj, const std::vector<double>& mu_w, const std::vector<double>& nu_w,
                     const UnbalancedParams& prm) {
  return usw([&](int) { return proj; }, mu_w, nu_w, prm);
}

}  // namespace msot
