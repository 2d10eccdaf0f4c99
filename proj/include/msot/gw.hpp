#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "msot/core.hpp"
#include "msot/linalg.hpp"
#include "msot/measures.hpp"

namespace msot {

// ---------------------------------------------------------------------------
// Couplings.

struct Coupling {
  Matrix plan;
  Vector a;  // row marginal
  Vector b;  // column marginal
};

inline Coupling make_coupling(Matrix plan, double tol = 1e-10) {
  require(plan.size() > 0 && plan.allFinite(), ErrorKind::kInvalidInput, "coupling must be nonempty and finite");
  require(plan.minCoeff() >= 0.0, ErrorKind::kInvalidInput, "coupling has negative entries");
  Vector a = plan.rowwise().sum(), b = plan.colwise().sum().transpose();
  require(std::abs(a.sum() - 1.0) <= tol, ErrorKind::kInvalidInput, "coupling is not a probability plan");
  return {std::move(plan), std::move(a), std::move(b)};
}

inline bool has_marginals(const Coupling& g, std::span<const double> a, std::span<const double> b, double tol = 1e-10) {
  if (static_cast<std::size_t>(g.plan.rows()) != a.size() || static_cast<std::size_t>(g.plan.cols()) != b.size())
    return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(g.a(static_cast<Eigen::Index>(i)) - a[i]) > tol) return false;
  for (std::size_t j = 0; j < b.size(); ++j)
    if (std::abs(g.b(static_cast<Eigen::Index>(j)) - b[j]) > tol) return false;
  return true;
}

// North-west corner rule in the given index order.
inline Coupling nw_corner(std::span<const double> a, std::span<const double> b) {
  validate_weights(a, "source weights");
  validate_weights(b, "target weights");
  double sa = 0.0, sb = 0.0;
  for (double v : a) sa += v;
  for (double v : b) sb += v;
  require_same_mass(sa, sb);
  Matrix plan = Matrix::Zero(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (const auto& c : nw_staircase(a, b))
    plan(static_cast<Eigen::Index>(c.i), static_cast<Eigen::Index>(c.j)) += std::max(c.mass, 0.0);
  Vector ra = plan.rowwise().sum(), rb = plan.colwise().sum().transpose();
  return {std::move(plan), std::move(ra), std::move(rb)};
}

// ---------------------------------------------------------------------------
// Inner-product GW between 1D measures.

struct GwResult {
  Coupling coupling;
  double value;
};

namespace detail {

inline void require_sorted(std::span<const double> x, const char* what) {
  require(!x.empty(), ErrorKind::kInvalidInput, std::string(what) + " is empty");
  for (std::size_t i = 0; i < x.size(); ++i)
    require(std::isfinite(x[i]), ErrorKind::kInvalidInput, std::string(what) + " must be finite");
  require(std::is_sorted(x.begin(), x.end()), ErrorKind::kInvalidInput, std::string(what) + " must be sorted");
}

// sum (x_i x_k - y_j y_l)^2 g_ij g_kl, expanded into second moments.
inline double gw1d_objective(std::span<const double> x, std::span<const double> y, const Matrix& g) {
  double mx = 0.0, my = 0.0, cross = 0.0;
  const Vector ra = g.rowwise().sum(), cb = g.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < g.rows(); ++i) mx += ra(i) * x[i] * x[i];
  for (Eigen::Index j = 0; j < g.cols(); ++j) my += cb(j) * y[j] * y[j];
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) cross += g(i, j) * x[i] * y[j];
  return mx * mx + my * my - 2.0 * cross * cross;
}

// The anti-monotone plan: NW on the reversed source, rows mapped back.
inline Coupling nw_reversed(std::span<const double> a, std::span<const double> b) {
  std::vector<double> ar(a.rbegin(), a.rend());
  Coupling c = nw_corner(ar, b);
  c.plan = c.plan.colwise().reverse().eval();
  c.a = c.a.reverse().eval();
  return c;
}

}  // namespace detail

// Optimal plan is one of NW(a, b) and NW(a-, b); the ascending one wins ties.
inline GwResult gw1d_inner(std::span<const double> x, std::span<const double> a, std::span<const double> y,
                           std::span<const double> b) {
  require(x.size() == a.size() && y.size() == b.size(), ErrorKind::kInvalidInput, "points and weights differ in length");
  detail::require_sorted(x, "source points");
  detail::require_sorted(y, "target points");
  Coupling asc = nw_corner(a, b);
  Coupling desc = detail::nw_reversed(a, b);
  const double va = detail::gw1d_objective(x, y, asc.plan);
  const double vd = detail::gw1d_objective(x, y, desc.plan);
  if (vd < va) return {std::move(desc), vd};
  return {std::move(asc), va};
}

// ---------------------------------------------------------------------------
// Hadamard-Wasserstein: L(x, x', y, y') = sum_t w_t (x_t x'_t - y_t y'_t)^2.

namespace detail {

inline Vector axis_weights(const std::optional<Vector>& w, Eigen::Index d) {
  if (!w) return Vector::Ones(d);
  require(w->size() == d, ErrorKind::kInvalidInput, "axis weights must have one entry per coordinate");
  require(w->allFinite() && w->minCoeff() >= 0.0, ErrorKind::kInvalidInput, "axis weights must be nonnegative");
  return *w;
}

}  // namespace detail

// (L (x) gamma)_ij = sum_kl L_ijkl gamma_kl. Each X_t = x_t x_t^T has rank
// one, so every term factors through matrix-vector products.
inline Matrix hw_tensor(const Matrix& X, const Matrix& Y, const Matrix& gamma,
                        const std::optional<Vector>& axis_weights = std::nullopt) {
  require(X.cols() == Y.cols(), ErrorKind::kInvalidInput, "clouds differ in dimension");
  require(gamma.rows() == X.rows() && gamma.cols() == Y.rows(), ErrorKind::kInvalidInput,
          "coupling shape does not match the clouds");
  const Vector w = detail::axis_weights(axis_weights, X.cols());
  const Vector p = gamma.rowwise().sum(), q = gamma.colwise().sum().transpose();
  const Eigen::Index n = X.rows(), m = Y.rows();
  Vector rowterm = Vector::Zero(n), colterm = Vector::Zero(m);
  Matrix out = Matrix::Zero(n, m);
  for (Eigen::Index t = 0; t < X.cols(); ++t) {
    if (w(t) == 0.0) continue;
    const Vector x2 = X.col(t).array().square(), y2 = Y.col(t).array().square();
    rowterm += w(t) * x2.dot(p) * x2;
    colterm += w(t) * y2.dot(q) * y2;
    const double s = X.col(t).dot(gamma * Y.col(t));
    out.noalias() -= (2.0 * w(t) * s) * X.col(t) * Y.col(t).transpose();
  }
  out.colwise() += rowterm;
  out.rowwise() += colterm.transpose();
  return out;
}

inline double hw_objective(const Matrix& X, const Matrix& Y, const Matrix& gamma,
                           const std::optional<Vector>& axis_weights = std::nullopt) {
  return hw_tensor(X, Y, gamma, axis_weights).cwiseProduct(gamma).sum();
}

namespace detail {

inline constexpr Eigen::Index kHwOracleMaxAtoms = 8;

// min <G, gamma> over Pi(a, b) by successive shortest paths on the
// bipartite residual graph (Bellman-Ford; costs may be negative).
inline Matrix transport_lp(const Matrix& G, std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<int>(G.rows()), m = static_cast<int>(G.cols());
  const int src = n + m, snk = n + m + 1, nodes = n + m + 2;
  struct Edge {
    int to;
    double cap;
    double cost;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> adj(nodes);
  auto add = [&](int u, int v, double cap, double cost) {
    adj[u].push_back(static_cast<int>(edges.size()));
    edges.push_back({v, cap, cost});
    adj[v].push_back(static_cast<int>(edges.size()));
    edges.push_back({u, 0.0, -cost});
  };
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) add(src, i, a[i], 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) add(i, n + j, inf, G(i, j));
  for (int j = 0; j < m; ++j) add(n + j, snk, b[j], 0.0);
  const double eps = 1e-15;
  for (int round = 0; round < 4 * nodes * nodes; ++round) {
    std::vector<double> dist(nodes, inf);
    std::vector<int> via(nodes, -1);
    dist[src] = 0.0;
    for (int it = 0; it < nodes; ++it) {
      bool changed = false;
      for (int u = 0; u < nodes; ++u) {
        if (dist[u] == inf) continue;
        for (int e : adj[u])
          if (edges[e].cap > eps && dist[u] + edges[e].cost < dist[edges[e].to] - 1e-15 * std::abs(dist[u])) {
            dist[edges[e].to] = dist[u] + edges[e].cost;
            via[edges[e].to] = e;
            changed = true;
          }
      }
      if (!changed) break;
    }
    if (dist[snk] == inf) break;
    double push = inf;
    for (int v = snk; v != src; v = edges[via[v] ^ 1].to) push = std::min(push, edges[via[v]].cap);
    for (int v = snk; v != src; v = edges[via[v] ^ 1].to) {
      edges[via[v]].cap -= push;
      edges[via[v] ^ 1].cap += push;
    }
  }
  Matrix plan = Matrix::Zero(n, m);
  for (int i = 0; i < n; ++i)
    for (int e : adj[i])
      if (edges[e].to >= n && edges[e].to < n + m) plan(i, edges[e].to - n) = edges[e ^ 1].cap;
  return plan;
}

}  // namespace detail

struct HwParams {
  int iterations = 100;
  double tol = 1e-14;  // stop once the Frank-Wolfe gap falls below this
  std::optional<Vector> axis_weights;
  std::optional<Matrix> init;  // defaults to a b^T, or the closed-form plan when d = 1
};

struct HwResult {
  Coupling coupling;
  double value;
  std::vector<double> trace;  // objective after each round, initial value first
};

// Conditional gradient with exact line search on the quadratic objective.
// For d = 1 the linear step is the monotone or anti-monotone NW plan, by
// the sign of sum x_i y_j gamma_ij; otherwise a small exact LP is solved.
inline HwResult hw_solve(const Matrix& X, const Matrix& Y, std::span<const double> a, std::span<const double> b,
                         const HwParams& prm = {}) {
  require(X.cols() == Y.cols() && X.cols() > 0, ErrorKind::kInvalidInput, "clouds differ in dimension");
  require(static_cast<std::size_t>(X.rows()) == a.size() && static_cast<std::size_t>(Y.rows()) == b.size(),
          ErrorKind::kInvalidInput, "weights do not match the clouds");
  require(prm.iterations >= 0, ErrorKind::kInvalidInput, "iterations must be nonnegative");
  validate_weights(a, "source weights");
  validate_weights(b, "target weights");
  double sa = 0.0, sb = 0.0;
  for (double v : a) sa += v;
  for (double v : b) sb += v;
  require_same_mass(sa, sb);
  const bool one_d = X.cols() == 1;
  require(one_d || (X.rows() <= detail::kHwOracleMaxAtoms && Y.rows() <= detail::kHwOracleMaxAtoms),
          ErrorKind::kInstanceTooLarge,
          "exact linear oracle is limited to " + std::to_string(detail::kHwOracleMaxAtoms) + " atoms per side in d >= 2");

  std::vector<Eigen::Index> xo(a.size()), yo(b.size());
  std::vector<double> as, bs;
  if (one_d) {
    std::iota(xo.begin(), xo.end(), Eigen::Index{0});
    std::iota(yo.begin(), yo.end(), Eigen::Index{0});
    std::stable_sort(xo.begin(), xo.end(), [&](auto i, auto j) { return X(i, 0) < X(j, 0); });
    std::stable_sort(yo.begin(), yo.end(), [&](auto i, auto j) { return Y(i, 0) < Y(j, 0); });
    for (auto i : xo) as.push_back(a[i]);
    for (auto j : yo) bs.push_back(b[j]);
  }
  auto oracle = [&](const Matrix& G, const Matrix& g) -> Matrix {
    if (!one_d) return detail::transport_lp(G, a, b);
    const double s = X.col(0).dot(g * Y.col(0));
    const Coupling c = s >= 0.0 ? nw_corner(as, bs) : detail::nw_reversed(as, bs);
    Matrix out = Matrix::Zero(X.rows(), Y.rows());
    for (Eigen::Index i = 0; i < c.plan.rows(); ++i)
      for (Eigen::Index j = 0; j < c.plan.cols(); ++j) out(xo[i], yo[j]) = c.plan(i, j);
    return out;
  };

  Matrix g;
  if (prm.init) {
    g = *prm.init;
    require(g.rows() == X.rows() && g.cols() == Y.rows(), ErrorKind::kInvalidInput, "initial plan has the wrong shape");
    require(has_marginals(make_coupling(g), a, b, 1e-9), ErrorKind::kInvalidInput,
            "initial plan does not match the weights");
  } else if (one_d) {
    // From the product plan the iteration can lock onto the wrong one of the
    // two monotone plans; start from the better one instead.
    std::vector<double> xs1, ys1;
    for (auto i : xo) xs1.push_back(X(i, 0));
    for (auto j : yo) ys1.push_back(Y(j, 0));
    const auto best = gw1d_inner(xs1, as, ys1, bs);
    g = Matrix::Zero(X.rows(), Y.rows());
    for (Eigen::Index i = 0; i < best.coupling.plan.rows(); ++i)
      for (Eigen::Index j = 0; j < best.coupling.plan.cols(); ++j) g(xo[i], yo[j]) = best.coupling.plan(i, j);
  } else {
    g = Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(a.size())) *
        Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size())).transpose();
  }
  Matrix lg = hw_tensor(X, Y, g, prm.axis_weights);
  double value = lg.cwiseProduct(g).sum();
  HwResult out{{}, value, {value}};
  for (int it = 0; it < prm.iterations; ++it) {
    const Matrix target = oracle(2.0 * lg, g);
    const Matrix dir = target - g;
    const double slope = 2.0 * lg.cwiseProduct(dir).sum();  // dE/dalpha at 0
    if (slope >= -prm.tol) break;
    const Matrix ld = hw_tensor(X, Y, dir, prm.axis_weights);
    const double curv = ld.cwiseProduct(dir).sum();
    double alpha = 1.0;
    if (curv > 0.0) alpha = std::clamp(-slope / (2.0 * curv), 0.0, 1.0);
    const double next = value + alpha * slope + alpha * alpha * curv;
    if (!(next < value)) break;
    g += alpha * dir;
    lg += alpha * ld;
    value = lg.cwiseProduct(g).sum();
    out.trace.push_back(value);
  }
  g = g.cwiseMax(0.0);
  out.coupling = make_coupling(std::move(g), 1e-9);
  out.value = value;
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian subspace detours.

struct GaussianSubspaces {
  Matrix Sigma;   // p x p source covariance
  Matrix Lambda;  // q x q target covariance
  Matrix VE;      // p x k orthonormal basis of E
  Matrix VF;      // q x k' orthonormal basis of F
};

namespace detail {

// Orthonormal completion [V, V_perp] of a basis with orthonormal columns.
inline Matrix complete_basis(const Matrix& v, const char* what) {
  const Eigen::Index d = v.rows(), k = v.cols();
  require(k >= 1 && k <= d, ErrorKind::kInvalidSubspace, std::string(what) + " has an invalid dimension");
  require((v.transpose() * v - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-10, ErrorKind::kInvalidSubspace,
          std::string(what) + " columns are not orthonormal");
  Matrix out(d, d);
  out.leftCols(k) = v;
  if (k < d) {
    const auto e = sym_eig(Matrix::Identity(d, d) - v * v.transpose());
    out.rightCols(d - k) = e.vectors.leftCols(d - k);
  }
  return out;
}

// Linear GW map between centered Gaussians N(0, S) on R^p and N(0, L) on
// R^q, q <= p: P_L [D_L^1/2 (D_S^(q))^-1/2, 0] P_S^T with the + sign choice.
inline Matrix gaussian_gw_map(const Matrix& S, const Matrix& L) {
  require(L.rows() <= S.rows(), ErrorKind::kInvalidInput, "target dimension exceeds source dimension");
  const auto es = sym_eig(S), el = sym_eig(L);
  require_spd_values(es.values, "source covariance");
  require_spd_values(el.values, "target covariance");
  const Eigen::Index p = S.rows(), q = L.rows();
  Matrix A = Matrix::Zero(q, p);
  for (Eigen::Index i = 0; i < q; ++i) A(i, i) = std::sqrt(el.values(i) / es.values(i));
  return el.vectors * A * es.vectors.transpose();
}

struct Blocks {
  Matrix W;  // [V, V_perp]
  Matrix in;   // covariance restricted to the subspace
  Matrix cross;  // (perp, in) block
  Matrix perp;
};

inline Blocks split(const Matrix& cov, const Matrix& v, const char* what) {
  const Matrix w = complete_basis(v, what);
  const Matrix r = w.transpose() * cov * w;
  const Eigen::Index k = v.cols(), d = cov.rows();
  Matrix in = r.topLeftCorner(k, k);
  in = 0.5 * (in + in.transpose()).eval();
  Matrix perp = r.bottomRightCorner(d - k, d - k);
  perp = 0.5 * (perp + perp.transpose()).eval();
  require(sym_eig(in).values.minCoeff() > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()), ErrorKind::kInvalidSubspace,
          std::string("covariance restricted to ") + what + " is singular");
  return {w, std::move(in), r.bottomLeftCorner(d - k, k), std::move(perp)};
}

inline void check_pair(const GaussianSubspaces& g) {
  require(g.Sigma.rows() == g.VE.rows() && g.Lambda.rows() == g.VF.rows(), ErrorKind::kInvalidInput,
          "subspace bases do not match the covariances");
  require(is_symmetric(g.Sigma) && is_symmetric(g.Lambda), ErrorKind::kInvalidInput, "covariances must be symmetric");
  require_spd_values(sym_eig(g.Sigma).values, "source covariance");
  require_spd_values(sym_eig(g.Lambda).values, "target covariance");
}

}  // namespace detail

struct MongeKnothe {
  Matrix B;  // q x p; T(x) = m_nu + B (x - m_mu)
  Matrix T_EF;
  Matrix T_perp;
  Matrix C;
};

// Monge-Knothe map for the Gaussian-restricted GW problem, p >= q, k = k'.
// Blocks are assembled in the bases [V_E, V_E_perp] and [V_F, V_F_perp]
// and rotated back, so that B Sigma B^T = Lambda.
inline MongeKnothe mk_gaussian(const GaussianSubspaces& g) {
  detail::check_pair(g);
  const Eigen::Index p = g.Sigma.rows(), q = g.Lambda.rows(), k = g.VE.cols();
  require(p >= q, ErrorKind::kInvalidInput, "source dimension must be at least the target dimension");
  require(g.VF.cols() == k, ErrorKind::kInvalidSubspace, "subspaces must have equal dimension");
  const auto se = detail::split(g.Sigma, g.VE, "E");
  const auto lf = detail::split(g.Lambda, g.VF, "F");
  const Matrix tef = detail::gaussian_gw_map(se.in, lf.in);
  Matrix tperp = Matrix::Zero(q - k, p - k);
  if (q > k) {
    Matrix schur_s = se.perp - se.cross * se.in.ldlt().solve(se.cross.transpose());
    Matrix schur_l = lf.perp - lf.cross * lf.in.ldlt().solve(lf.cross.transpose());
    tperp = detail::gaussian_gw_map(0.5 * (schur_s + schur_s.transpose()), 0.5 * (schur_l + schur_l.transpose()));
  }
  // C = (Lambda_{F'F} T^-T - T_perp Sigma_{E'E}) Sigma_E^-1
  const Matrix lhs = tef.partialPivLu().solve(lf.cross.transpose()).transpose() - tperp * se.cross;
  const Matrix c = se.in.ldlt().solve(lhs.transpose()).transpose();
  Matrix b = Matrix::Zero(q, p);
  b.topLeftCorner(k, k) = tef;
  b.bottomLeftCorner(q - k, k) = c;
  b.bottomRightCorner(q - k, p - k) = tperp;
  return {lf.W * b * se.W.transpose(), tef, tperp, c};
}

// Joint covariance of the Monge-independent coupling (centered), k >= k'.
inline Matrix mi_gaussian(const GaussianSubspaces& g) {
  detail::check_pair(g);
  const Eigen::Index p = g.Sigma.rows(), q = g.Lambda.rows(), k = g.VE.cols(), kf = g.VF.cols();
  require(k >= kf, ErrorKind::kInvalidSubspace, "source subspace must be at least as large as the target one");
  const auto se = detail::split(g.Sigma, g.VE, "E");
  const auto lf = detail::split(g.Lambda, g.VF, "F");
  const Matrix tef = detail::gaussian_gw_map(se.in, lf.in);
  const Matrix left = se.W.leftCols(k) * se.in + se.W.rightCols(p - k) * se.cross;
  const Matrix right =
      g.VF.transpose() + lf.in.ldlt().solve(lf.cross.transpose()) * lf.W.rightCols(q - kf).transpose();
  const Matrix c = left * tef.transpose() * right;
  Matrix gamma(p + q, p + q);
  gamma.topLeftCorner(p, p) = g.Sigma;
  gamma.bottomRightCorner(q, q) = g.Lambda;
  gamma.topRightCorner(p, q) = c;
  gamma.bottomLeftCorner(q, p) = c.transpose();
  return gamma;
}

}  // namespace msot
