#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "msot/core.hpp"

namespace msot {

inline void validate_weights(std::span<const double> w, const char* what = "weights") {
  require(!w.empty(), ErrorKind::kInvalidInput, std::string(what) + " are empty");
  double total = 0.0;
  for (double v : w) {
    require(std::isfinite(v), ErrorKind::kInvalidInput, std::string(what) + " must be finite");
    require(v >= 0.0, ErrorKind::kInvalidInput, std::string(what) + " must be nonnegative");
    total += v;
  }
  require(std::isfinite(total), ErrorKind::kInvalidInput, std::string(what) + " total is not finite");
}

inline void validate_probability(std::span<const double> w, const char* what = "weights") {
  validate_weights(w, what);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  require(std::abs(total - 1.0) <= 1e-12 * std::max<double>(1.0, static_cast<double>(w.size())),
          ErrorKind::kInvalidInput, std::string(what) + " must sum to 1");
}

inline std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

inline bool weights_uniform(std::span<const double> w) {
  for (double v : w)
    if (v != w[0]) return false;
  return true;
}

struct SortedProfile {
  std::vector<double> positions;
  std::vector<double> weights;
  std::vector<double> cum;
  // order[k] is the input index of the k-th sorted atom.
  std::vector<std::size_t> order;

  std::size_t size() const { return positions.size(); }
  double mass() const { return cum.empty() ? 0.0 : cum.back(); }
};

inline SortedProfile build_profile(std::span<const double> points, std::span<const double> weights) {
  require(points.size() == weights.size(), ErrorKind::kInvalidInput,
          "points and weights differ in length");
  validate_weights(weights);
  const std::size_t n = points.size();
  SortedProfile p;
  p.order.resize(n);
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  for (double x : points) require(std::isfinite(x), ErrorKind::kInvalidInput, "non-finite position");
  std::stable_sort(p.order.begin(), p.order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  p.positions.resize(n);
  p.weights.resize(n);
  p.cum.resize(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    p.positions[k] = points[p.order[k]];
    p.weights[k] = weights[p.order[k]];
    acc += p.weights[k];
    p.cum[k] = acc;
  }
  return p;
}

inline SortedProfile build_profile(std::span<const double> points) {
  const auto w = uniform_weights(points.size());
  return build_profile(points, w);
}

// F(x) = mass of atoms at positions <= x.
inline double cdf(const SortedProfile& p, double x) {
  const auto it = std::upper_bound(p.positions.begin(), p.positions.end(), x);
  if (it == p.positions.begin()) return 0.0;
  return p.cum[static_cast<std::size_t>(it - p.positions.begin()) - 1];
}

// Left-continuous inverse inf{x : F(x) >= q * mass}; q = 0 maps to the first atom.
inline double quantile(const SortedProfile& p, double q) {
  require(q >= 0.0 && q <= 1.0, ErrorKind::kInvalidInput, "quantile level outside [0,1]");
  require(p.size() > 0, ErrorKind::kInvalidInput, "empty profile");
  const double level = q * p.mass();
  auto it = std::lower_bound(p.cum.begin(), p.cum.end(), level);
  if (it == p.cum.end()) --it;
  return p.positions[static_cast<std::size_t>(it - p.cum.begin())];
}

inline void require_same_mass(double a, double b) {
  require(std::abs(a - b) <= kMassTol, ErrorKind::kUnbalancedInput,
          "total masses differ: " + std::to_string(a) + " vs " + std::to_string(b));
}

inline double cost_pow(double d, double p) {
  d = std::abs(d);
  if (p == 1.0) return d;
  if (p == 2.0) return d * d;
  return std::pow(d, p);
}

// Walks the merged cumulative-weight breakpoints; visit(len, x, y) is called
// once per piece on which both quantile functions are constant.
template <class Visit>
void merge_quantiles(const SortedProfile& mu, const SortedProfile& nu, Visit&& visit) {
  std::size_t i = 0, j = 0;
  double prev = 0.0;
  const std::size_t n = mu.size(), m = nu.size();
  while (i < n && j < m) {
    const double next = std::min(mu.cum[i], nu.cum[j]);
    const double len = next - prev;
    if (len > 0.0) visit(len, mu.positions[i], nu.positions[j]);
    prev = std::max(prev, next);
    const bool adv_i = mu.cum[i] <= next;
    const bool adv_j = nu.cum[j] <= next;
    if (adv_i) ++i;
    if (adv_j) ++j;
  }
}

inline double wasserstein_1d(const SortedProfile& mu, const SortedProfile& nu, double p) {
  require(p >= 1.0, ErrorKind::kInvalidInput, "order p must be >= 1");
  require(mu.size() > 0 && nu.size() > 0, ErrorKind::kInvalidInput, "empty profile");
  require_same_mass(mu.mass(), nu.mass());
  double total = 0.0;
  merge_quantiles(mu, nu, [&](double len, double x, double y) { total += len * cost_pow(x - y, p); });
  return total;
}

// ---------------------------------------------------------------------------
// Monotone (north-west) coupling and the matching dual potentials.

struct Cell {
  std::size_t i;
  std::size_t j;
  double mass;
};

// Staircase on sorted atoms. Every atom is visited, zero-mass cells included.
// When both current atoms are exhausted together, both indices advance.
inline std::vector<Cell> nw_staircase(std::span<const double> a, std::span<const double> b) {
  std::vector<Cell> cells;
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) return cells;
  cells.reserve(n + m);
  std::size_t i = 0, j = 0;
  double ra = a[0], rb = b[0];
  while (true) {
    const double t = std::min(ra, rb);
    cells.push_back({i, j, t});
    ra -= t;
    rb -= t;
    if (i + 1 == n && j + 1 == m) break;
    const bool a_done = ra <= 0.0;
    const bool b_done = rb <= 0.0;
    if (i + 1 == n) {
      ++j;
      rb = b[j];
      ra = std::max(ra, 0.0);
    } else if (j + 1 == m) {
      ++i;
      ra = a[i];
      rb = std::max(rb, 0.0);
    } else if (a_done && b_done) {
      ++i;
      ++j;
      ra = a[i];
      rb = b[j];
    } else if (a_done) {
      ++i;
      ra = a[i];
    } else {
      ++j;
      rb = b[j];
    }
  }
  return cells;
}

struct DualPotentials {
  std::vector<double> f;  // source atoms, input order
  std::vector<double> g;  // target atoms, input order
};

// Potentials certifying the monotone coupling: f + g = |x - y|^p on every
// staircase cell, first source atom gauged to 0. A diagonal step (both atoms
// exhausted together) fixes the free constant at the midpoint of its
// feasible interval, so identical inputs give f = g = 0.
inline DualPotentials dual_potentials_1d(const SortedProfile& mu, const SortedProfile& nu, double p) {
  require(p >= 1.0, ErrorKind::kInvalidInput, "order p must be >= 1");
  require_same_mass(mu.mass(), nu.mass());
  const auto cells = nw_staircase(mu.weights, nu.weights);
  const std::size_t n = mu.size(), m = nu.size();
  std::vector<double> fs(n, 0.0), gs(m, 0.0);
  auto c = [&](std::size_t i, std::size_t j) { return cost_pow(mu.positions[i] - nu.positions[j], p); };
  fs[0] = 0.0;
  gs[0] = c(0, 0);
  for (std::size_t k = 1; k < cells.size(); ++k) {
    const Cell& a = cells[k - 1];
    const Cell& b = cells[k];
    if (b.i != a.i && b.j != a.j) {
      fs[b.i] = fs[a.i] + 0.5 * ((c(b.i, b.j) - c(a.i, b.j)) + (c(b.i, a.j) - c(a.i, a.j)));
      gs[b.j] = c(b.i, b.j) - fs[b.i];
    } else if (b.i != a.i) {
      fs[b.i] = c(b.i, b.j) - gs[b.j];
    } else {
      gs[b.j] = c(b.i, b.j) - fs[b.i];
    }
  }
  DualPotentials out;
  out.f.assign(n, 0.0);
  out.g.assign(m, 0.0);
  for (std::size_t k = 0; k < n; ++k) out.f[mu.order[k]] = fs[k];
  for (std::size_t k = 0; k < m; ++k) out.g[nu.order[k]] = gs[k];
  return out;
}

// ---------------------------------------------------------------------------
// Circle S^1 = [0,1) with periodic identification.

struct CircleProfile {
  std::vector<double> angles;
  std::vector<double> weights;
  std::vector<double> cum;

  std::size_t size() const { return angles.size(); }
};

inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;
  return r;
}

inline CircleProfile build_circle_profile(std::span<const double> angles, std::span<const double> weights) {
  require(angles.size() == weights.size(), ErrorKind::kInvalidInput, "angles and weights differ in length");
  validate_probability(weights);
  std::vector<double> wrapped(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    require(std::isfinite(angles[i]), ErrorKind::kInvalidInput, "non-finite angle");
    wrapped[i] = wrap_unit(angles[i]);
  }
  const SortedProfile s = build_profile(wrapped, weights);
  CircleProfile c;
  c.angles = s.positions;
  c.weights = s.weights;
  c.cum = s.cum;
  // The last cumulative value is the total mass, forced to 1 so the quantile
  // of level 1 is always the last atom.
  c.cum.back() = 1.0;
  return c;
}

inline CircleProfile build_circle_profile(std::span<const double> angles) {
  const auto w = uniform_weights(angles.size());
  return build_circle_profile(angles, w);
}

namespace detail {

// Left-continuous quantile on (0,1]; level 0 is mapped to the first atom.
inline double circle_quantile_index_value(const CircleProfile& c, double u, std::size_t* idx = nullptr) {
  auto it = std::lower_bound(c.cum.begin(), c.cum.end(), u);
  if (it == c.cum.end()) --it;
  const auto k = static_cast<std::size_t>(it - c.cum.begin());
  if (idx) *idx = k;
  return c.angles[k];
}

// Periodic extension G(s + k) = G(s) + k of the quantile function.
inline double circle_quantile_ext(const CircleProfile& c, double s) {
  double k = std::ceil(s) - 1.0;
  double u = s - k;  // u in (0, 1]
  if (u <= 0.0) {
    u += 1.0;
    k -= 1.0;
  }
  return circle_quantile_index_value(c, u) + k;
}

}  // namespace detail

inline double circle_w2_vs_uniform(const CircleProfile& mu) {
  require(mu.size() > 0, ErrorKind::kInvalidInput, "empty circle profile");
  const std::size_t n = mu.size();
  if (weights_uniform(mu.weights)) {
    const double nn = static_cast<double>(n);
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = mu.angles[i];
      s1 += x;
      s2 += x * x;
      s3 += (nn + 1.0 - 2.0 * static_cast<double>(i + 1)) * x;
    }
    return s2 / nn - (s1 / nn) * (s1 / nn) + s3 / (nn * nn) + 1.0 / 12.0;
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += mu.weights[i] * mu.angles[i];
  const double alpha = mean - 0.5;
  double total = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = mu.angles[i] - alpha - prev;
    const double b = mu.angles[i] - alpha - mu.cum[i];
    total += (a * a * a - b * b * b) / 3.0;
    prev = mu.cum[i];
  }
  return total;
}

inline double circle_w1_level_median(const CircleProfile& mu, const CircleProfile& nu) {
  require(mu.size() > 0 && nu.size() > 0, ErrorKind::kInvalidInput, "empty circle profile");
  std::vector<double> breaks;
  breaks.reserve(mu.size() + nu.size() + 2);
  breaks.push_back(0.0);
  breaks.insert(breaks.end(), mu.angles.begin(), mu.angles.end());
  breaks.insert(breaks.end(), nu.angles.begin(), nu.angles.end());
  breaks.push_back(1.0);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  struct Piece {
    double value;
    double len;
  };
  std::vector<Piece> pieces;
  std::size_t i = 0, j = 0;
  double fm = 0.0, fn = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double x = breaks[k];
    while (i < mu.size() && mu.angles[i] <= x) fm = mu.cum[i++];
    while (j < nu.size() && nu.angles[j] <= x) fn = nu.cum[j++];
    const double len = breaks[k + 1] - x;
    if (len > 0.0) pieces.push_back({fm - fn, len});
  }
  std::vector<Piece> sorted = pieces;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Piece& a, const Piece& b) { return a.value < b.value; });
  double acc = 0.0, level = sorted.back().value;
  for (const Piece& pc : sorted) {
    acc += pc.len;
    if (acc >= 0.5) {
      level = pc.value;
      break;
    }
  }
  double total = 0.0;
  for (const Piece& pc : pieces) total += pc.len * std::abs(pc.value - level);
  return total;
}

// Cost of matching the quantiles of mu against those of nu shifted by alpha:
// integral over t in (0,1) of |F_mu^{-1}(t) - G_nu(t + alpha)|^p.
inline double circle_shift_cost(const CircleProfile& mu, const CircleProfile& nu, double p, double alpha) {
  std::vector<double> breaks;
  breaks.reserve(mu.size() + 2 * nu.size() + 2);
  breaks.push_back(0.0);
  for (double c : mu.cum)
    if (c > 0.0 && c < 1.0) breaks.push_back(c);
  for (double c : nu.cum) {
    for (double k = -2.0; k <= 2.0; k += 1.0) {
      const double t = c - alpha + k;
      if (t > 0.0 && t < 1.0) breaks.push_back(t);
    }
  }
  breaks.push_back(1.0);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double len = breaks[k + 1] - breaks[k];
    if (len <= 0.0) continue;
    const double mid = 0.5 * (breaks[k] + breaks[k + 1]);
    const double x = detail::circle_quantile_index_value(mu, mid);
    const double y = detail::circle_quantile_ext(nu, mid + alpha);
    total += len * cost_pow(x - y, p);
  }
  return total;
}

// Right derivative of circle_shift_cost in alpha; as alpha grows each jump of
// the shifted quantile moves left, replacing its left value by its right one.
inline double circle_shift_slope(const CircleProfile& mu, const CircleProfile& nu, double p, double alpha) {
  double slope = 0.0;
  const std::size_t m = nu.size();
  for (std::size_t j = 0; j < m; ++j) {
    for (double k = -3.0; k <= 3.0; k += 1.0) {
      const double t = nu.cum[j] - alpha + k;
      if (!(t > 0.0 && t <= 1.0)) continue;
      const double x = detail::circle_quantile_index_value(mu, t);
      const double before = nu.angles[j] + k;
      const double after = (j + 1 < m) ? nu.angles[j + 1] + k : nu.angles[0] + k + 1.0;
      slope += cost_pow(x - after, p) - cost_pow(x - before, p);
    }
  }
  return slope;
}

inline double circle_wp_binary_search(const CircleProfile& mu, const CircleProfile& nu, double p, double eps = 1e-6) {
  require(eps > 0.0, ErrorKind::kInvalidInput, "eps must be positive");
  require(p >= 1.0, ErrorKind::kInvalidInput, "order p must be >= 1");
  require(mu.size() > 0 && nu.size() > 0, ErrorKind::kInvalidInput, "empty circle profile");
  double lo = -1.0, hi = 1.0;
  while (hi - lo > eps) {
    const double mid = 0.5 * (lo + hi);
    if (circle_shift_slope(mu, nu, p, mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  // The cost is piecewise linear in alpha with kinks where a jump of one
  // quantile function meets a jump of the other; the bracket holds the
  // minimizing kink, if any, so evaluating there makes the value exact.
  double best = std::min(circle_shift_cost(mu, nu, p, lo), circle_shift_cost(mu, nu, p, hi));
  const double slack = 4.0 * eps;
  std::vector<double> mu_breaks(mu.cum.begin(), mu.cum.end());
  mu_breaks.push_back(0.0);
  std::sort(mu_breaks.begin(), mu_breaks.end());
  std::vector<double> kinks;
  for (double cn : nu.cum) {
    for (double k = -3.0; k <= 3.0; k += 1.0) {
      // alpha = cn + k - cm for a breakpoint cm of mu (0 included).
      const double lo_cm = cn + k - (hi + slack), hi_cm = cn + k - (lo - slack);
      auto it = std::lower_bound(mu_breaks.begin(), mu_breaks.end(), lo_cm);
      for (; it != mu_breaks.end() && *it <= hi_cm; ++it) kinks.push_back(cn + k - *it);
    }
  }
  std::sort(kinks.begin(), kinks.end());
  // Differences of cumulative sums coincide up to round-off for regular weights.
  kinks.erase(std::unique(kinks.begin(), kinks.end(), [](double a, double b) { return b - a <= 1e-13; }), kinks.end());
  for (double a : kinks) best = std::min(best, circle_shift_cost(mu, nu, p, a));
  return best;
}

}  // namespace msot
