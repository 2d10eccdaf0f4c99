#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msot/core.hpp"
#include "msot/euclidean.hpp"
#include "msot/hyperbolic.hpp"
#include "msot/measures.hpp"

namespace msot {

using PointFn = std::function<double(const Vector&)>;
using PointGrad = std::function<Vector(const Vector&)>;

// Sum of the supported terms; absent terms have zero coefficient.
struct Functional {
  PointFn potential;
  PointGrad potential_grad;
  double interaction = 0.0;  // coefficient of 1/2 double integral of W
  double interaction_a = 4.0;
  double interaction_b = 2.0;
  double entropy = 0.0;
  std::optional<EuclideanCloud> target;  // SW_2^2 to a fixed cloud
  std::optional<HyperbolicCloud> hyperbolic_target;
  DirectionSet target_dirs;

  static Functional zero() { return {}; }

  static Functional potential_energy(PointFn v, PointGrad grad) {
    Functional f;
    f.potential = std::move(v);
    f.potential_grad = std::move(grad);
    return f;
  }

  static Functional interaction_energy(double a = 4.0, double b = 2.0) {
    require(a > b && b > 0.0, ErrorKind::kInvalidInput, "interaction powers need a > b > 0");
    Functional f;
    f.interaction = 1.0;
    f.interaction_a = a;
    f.interaction_b = b;
    return f;
  }

  static Functional entropy_on_grid() {
    Functional f;
    f.entropy = 1.0;
    return f;
  }

  static Functional sw_to_target(EuclideanCloud t, DirectionSet dirs) {
    require(dirs.dim() == t.dim(), ErrorKind::kInvalidInput, "target directions do not match the dimension");
    Functional f;
    f.target = std::move(t);
    f.target_dirs = std::move(dirs);
    return f;
  }

  // Geodesic sliced distance to a hyperbolic target; dirs are ideal points.
  static Functional ghsw_to_target(HyperbolicCloud t, DirectionSet dirs) {
    require(dirs.dim() == t.dim(), ErrorKind::kInvalidInput, "target directions do not match the dimension");
    Functional f;
    f.hyperbolic_target = to_lorentz(t);
    f.target_dirs = std::move(dirs);
    return f;
  }

  bool has_potential() const { return static_cast<bool>(potential); }
};

inline Functional operator+(Functional a, const Functional& b) {
  if (b.potential) {
    require(!a.potential, ErrorKind::kUnsupported, "only one potential term is supported");
    a.potential = b.potential;
    a.potential_grad = b.potential_grad;
  }
  if (b.interaction != 0.0) {
    require(a.interaction == 0.0, ErrorKind::kUnsupported, "only one interaction term is supported");
    a.interaction = b.interaction;
    a.interaction_a = b.interaction_a;
    a.interaction_b = b.interaction_b;
  }
  a.entropy += b.entropy;
  if (b.target || b.hyperbolic_target) {
    require(!a.target && !a.hyperbolic_target, ErrorKind::kUnsupported, "only one target term is supported");
    a.target = b.target;
    a.hyperbolic_target = b.hyperbolic_target;
    a.target_dirs = b.target_dirs;
  }
  return a;
}

namespace detail {

// r^e from r^2, exact for the common even powers.
inline double pow_from_sq(double r2, double e) {
  if (e == 0.0) return 1.0;
  if (e == 2.0) return r2;
  if (e == 4.0) return r2 * r2;
  return std::pow(r2, 0.5 * e);
}

}  // namespace detail

inline double interaction_kernel(const Vector& z, double a, double b) {
  const double r2 = z.squaredNorm();
  return detail::pow_from_sq(r2, a) / a - detail::pow_from_sq(r2, b) / b;
}

inline Vector interaction_kernel_grad(const Vector& z, double a, double b) {
  const double r2 = z.squaredNorm();
  if (r2 == 0.0) return Vector::Zero(z.size());
  return (detail::pow_from_sq(r2, a - 2.0) - detail::pow_from_sq(r2, b - 2.0)) * z;
}

namespace detail {

// sum_j w_j W(x_i - x_j) and sum_j w_j grad W(x_i - x_j) for one atom i.
inline double interaction_row(const Matrix& pts, std::span<const double> w, Eigen::Index i, double a, double b,
                              Vector* grad) {
  const Matrix diff = (-pts).rowwise() + pts.row(i);
  const Vector r2 = diff.rowwise().squaredNorm();
  double e = 0.0;
  Vector coef(pts.rows());
  for (Eigen::Index j = 0; j < pts.rows(); ++j) {
    const double wj = w[static_cast<std::size_t>(j)];
    e += wj * (pow_from_sq(r2(j), a) / a - pow_from_sq(r2(j), b) / b);
    coef(j) = r2(j) == 0.0 ? 0.0 : wj * (pow_from_sq(r2(j), a - 2.0) - pow_from_sq(r2(j), b - 2.0));
  }
  if (grad) *grad = diff.transpose() * coef;
  return e;
}

}  // namespace detail

// Derivative of W_2^2 between two weighted 1D measures with respect to each
// source position, through the monotone coupling.
inline std::vector<double> w2_position_gradient(std::span<const double> xs, std::span<const double> wx,
                                                std::span<const double> ys, std::span<const double> wy) {
  const auto px = build_profile(xs, wx), py = build_profile(ys, wy);
  require_same_mass(px.mass(), py.mass());
  std::vector<double> out(xs.size(), 0.0);
  for (const Cell& c : nw_staircase(px.weights, py.weights))
    out[px.order[c.i]] += 2.0 * c.mass * (px.positions[c.i] - py.positions[c.j]);
  return out;
}

// Gradient of sw_p(mu, nu, dirs, 2) with respect to the atoms of mu, for any weights.
inline Matrix sw2_position_gradient(const EuclideanCloud& mu, const EuclideanCloud& nu, const DirectionSet& dirs) {
  check_pair(mu, nu, dirs);
  const Eigen::Index L = dirs.count();
  std::vector<Vector> coef(static_cast<std::size_t>(L));
  parallel_for(coef.size(), [&](std::size_t l) {
    const auto row = dirs.dirs.row(static_cast<Eigen::Index>(l));
    const auto g = w2_position_gradient(project_points(mu.points, row), mu.weights, project_points(nu.points, row), nu.weights);
    coef[l] = Eigen::Map<const Vector>(g.data(), mu.size());
  });
  Matrix grad = Matrix::Zero(mu.size(), mu.dim());
  for (Eigen::Index l = 0; l < L; ++l) grad += coef[static_cast<std::size_t>(l)] * dirs.dirs.row(l) / static_cast<double>(L);
  return grad;
}

// ---------------------------------------------------------------------------
// Functional values and particle gradients.

inline double eval_functional(const Functional& f, const EuclideanCloud& c) {
  require(f.entropy == 0.0, ErrorKind::kUnsupported, "entropy needs a density; use a grid state");
  require(!f.hyperbolic_target, ErrorKind::kUnsupported, "hyperbolic target on a Euclidean cloud");
  double v = 0.0;
  const auto n = static_cast<std::size_t>(c.size());
  if (f.potential)
    for (std::size_t i = 0; i < n; ++i) v += c.weights[i] * f.potential(c.points.row(static_cast<Eigen::Index>(i)).transpose());
  if (f.interaction != 0.0) {
    std::vector<double> rows(n);
    parallel_for(n, [&](std::size_t i) {
      rows[i] = c.weights[i] * detail::interaction_row(c.points, c.weights, static_cast<Eigen::Index>(i), f.interaction_a,
                                                       f.interaction_b, nullptr);
    });
    double s = 0.0;
    for (double r : rows) s += r;
    v += 0.5 * f.interaction * s;
  }
  if (f.target) v += sw_p(c, *f.target, f.target_dirs, 2.0);
  return v;
}

// Wasserstein gradient of the functional at each atom (per unit mass).
inline Matrix particle_velocity(const Functional& f, const EuclideanCloud& c) {
  require(f.entropy == 0.0, ErrorKind::kUnsupported, "entropy has no particle gradient");
  require(!f.hyperbolic_target, ErrorKind::kUnsupported, "hyperbolic target on a Euclidean cloud");
  const Eigen::Index n = c.size();
  Matrix v = Matrix::Zero(n, c.dim());
  if (f.potential) {
    require(static_cast<bool>(f.potential_grad), ErrorKind::kInvalidInput, "potential term has no gradient");
    for (Eigen::Index i = 0; i < n; ++i) v.row(i) += f.potential_grad(c.points.row(i).transpose()).transpose();
  }
  if (f.interaction != 0.0) {
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t ui) {
      Vector acc;
      detail::interaction_row(c.points, c.weights, static_cast<Eigen::Index>(ui), f.interaction_a, f.interaction_b, &acc);
      v.row(static_cast<Eigen::Index>(ui)) += f.interaction * acc.transpose();
    });
  }
  if (f.target) {
    const Matrix g = sw2_position_gradient(c, *f.target, f.target_dirs);
    for (Eigen::Index i = 0; i < n; ++i)
      if (c.weights[static_cast<std::size_t>(i)] > 0.0) v.row(i) += g.row(i) / c.weights[static_cast<std::size_t>(i)];
  }
  return v;
}

// ---------------------------------------------------------------------------
// Grid states.

struct GridState {
  Matrix nodes;             // N x d
  std::vector<double> rho;  // probability vector on the nodes
  double cell_volume = 1.0;
};

inline GridState make_grid_state(Matrix nodes, std::vector<double> rho, double cell_volume) {
  require(nodes.rows() > 0 && static_cast<Eigen::Index>(rho.size()) == nodes.rows(), ErrorKind::kInvalidInput,
          "one density value per grid node is required");
  require(cell_volume > 0.0, ErrorKind::kInvalidInput, "cell volume must be positive");
  validate_weights(rho);
  double s = 0.0;
  for (double r : rho) s += r;
  require(std::abs(s - 1.0) <= 1e-10, ErrorKind::kInvalidInput, "grid density must sum to one");
  return {std::move(nodes), std::move(rho), cell_volume};
}

inline std::vector<double> simplex_project(std::span<const double> v) {
  require(!v.empty(), ErrorKind::kInvalidInput, "cannot project an empty vector");
  for (double x : v) require(std::isfinite(x), ErrorKind::kInvalidInput, "non-finite entry");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) tau = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - tau, 0.0);
  return out;
}

inline constexpr double kEntropyFloor = 1e-300;

inline double eval_functional(const Functional& f, const GridState& s) {
  require(!f.hyperbolic_target, ErrorKind::kUnsupported, "hyperbolic target on a grid");
  const auto n = s.rho.size();
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = s.nodes.row(static_cast<Eigen::Index>(i)).transpose();
    if (f.potential) v += f.potential(x) * s.rho[i];
    if (f.entropy != 0.0) v += f.entropy * s.rho[i] * std::log(std::max(s.rho[i], kEntropyFloor) / s.cell_volume);
  }
  if (f.interaction != 0.0) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += s.rho[i] * detail::interaction_row(s.nodes, s.rho, static_cast<Eigen::Index>(i), f.interaction_a, f.interaction_b,
                                                nullptr);
    v += 0.5 * f.interaction * acc;
  }
  if (f.target) v += sw_p(make_cloud(s.nodes, s.rho), *f.target, f.target_dirs, 2.0);
  return v;
}

namespace detail {

// Derivative of sw_p(a, b, dirs, 2) with respect to the weights of b, up to an
// additive constant (the target-side potentials, slice-averaged).
inline std::vector<double> sw2_weight_gradient(const Matrix& pa, std::span<const double> wa, const Matrix& pb,
                                               std::span<const double> wb, const DirectionSet& dirs) {
  const Eigen::Index L = dirs.count();
  std::vector<std::vector<double>> per(static_cast<std::size_t>(L));
  parallel_for(per.size(), [&](std::size_t l) {
    const auto row = dirs.dirs.row(static_cast<Eigen::Index>(l));
    per[l] = dual_potentials_1d(build_profile(project_points(pa, row), wa), build_profile(project_points(pb, row), wb), 2.0).g;
  });
  std::vector<double> out(wb.size(), 0.0);
  for (const auto& g : per)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i] / static_cast<double>(L);
  return out;
}

}  // namespace detail

// First variation of the functional at the grid density.
inline std::vector<double> grid_gradient(const Functional& f, const GridState& s) {
  require(!f.hyperbolic_target, ErrorKind::kUnsupported, "hyperbolic target on a grid");
  const auto n = s.rho.size();
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = s.nodes.row(static_cast<Eigen::Index>(i)).transpose();
    if (f.potential) g[i] += f.potential(x);
    if (f.entropy != 0.0) g[i] += f.entropy * (std::log(std::max(s.rho[i], kEntropyFloor) / s.cell_volume) + 1.0);
    if (f.interaction != 0.0)
      g[i] += f.interaction * detail::interaction_row(s.nodes, s.rho, static_cast<Eigen::Index>(i), f.interaction_a,
                                                      f.interaction_b, nullptr);
  }
  if (f.target) {
    const auto t = detail::sw2_weight_gradient(f.target->points, f.target->weights, s.nodes, s.rho, f.target_dirs);
    for (std::size_t i = 0; i < n; ++i) g[i] += t[i];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Traces.

struct FlowRecord {
  int step = 0;
  double energy = 0.0;     // functional value
  double objective = 0.0;  // JKO objective at the accepted iterate (energy for explicit schemes)
  double grad_norm = 0.0;  // RMS residual gradient at the accepted iterate
  std::optional<Matrix> positions;
};

struct FlowTrace {
  std::vector<FlowRecord> records;

  std::vector<double> energies() const {
    std::vector<double> out;
    for (const auto& r : records) out.push_back(r.energy);
    return out;
  }
};

inline nlohmann::json to_json(const FlowRecord& r) {
  nlohmann::json j{{"step", r.step}, {"energy", r.energy}, {"objective", r.objective}, {"grad_norm", r.grad_norm}};
  if (r.positions) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.positions->rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(r.positions->cols()));
      for (Eigen::Index k = 0; k < r.positions->cols(); ++k) row[static_cast<std::size_t>(k)] = (*r.positions)(i, k);
      rows.push_back(row);
    }
    j["positions"] = rows;
  }
  return j;
}

// One JSON object per line.
inline void write_trace(std::ostream& os, const FlowTrace& t) {
  for (const auto& r : t.records) os << to_json(r).dump() << '\n';
}

inline FlowTrace read_trace(std::istream& is) {
  FlowTrace t;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kInvalidInput, std::string("bad trace line: ") + e.what());
    }
    FlowRecord r;
    r.step = j.at("step").get<int>();
    r.energy = j.at("energy").get<double>();
    r.objective = j.at("objective").get<double>();
    r.grad_norm = j.at("grad_norm").get<double>();
    if (j.contains("positions")) {
      const auto& rows = j["positions"];
      const auto n = static_cast<Eigen::Index>(rows.size());
      const auto d = n > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
      Matrix m(n, d);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < d; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
      r.positions = m;
    }
    require(t.records.empty() || r.step > t.records.back().step, ErrorKind::kInvalidInput, "trace steps must increase");
    t.records.push_back(std::move(r));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Schemes.

struct FlowParams {
  double tau = 0.05;        // JKO step or explicit step size
  int steps = 10;           // outer steps K
  double lr = 1e-2;         // inner gradient-descent rate
  int inner_iters = 50;     // N_e
  Eigen::Index slices = 100;
  std::uint64_t seed = 0;
  double dilation = 1.0;    // factor in front of the SW coupling term
  int snapshot_every = 0;   // 0 disables position snapshots
};

inline void validate(const FlowParams& p) {
  require(p.tau > 0.0, ErrorKind::kInvalidInput, "step size must be positive");
  require(p.steps >= 0 && p.inner_iters >= 0, ErrorKind::kInvalidInput, "iteration counts must be nonnegative");
  require(p.lr > 0.0, ErrorKind::kInvalidInput, "learning rate must be positive");
  require(p.slices >= 1, ErrorKind::kInvalidInput, "need at least one slice");
  require(p.dilation > 0.0, ErrorKind::kInvalidInput, "dilation must be positive");
}

namespace detail {

inline std::uint64_t step_seed(std::uint64_t seed, int k) { return stream_rng(seed, static_cast<std::uint64_t>(k))(); }

inline double rms(const Matrix& g) { return g.rows() == 0 ? 0.0 : std::sqrt(g.squaredNorm() / static_cast<double>(g.rows())); }

inline double rms(const std::vector<double>& g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return g.empty() ? 0.0 : std::sqrt(s / static_cast<double>(g.size()));
}

inline bool snapshot_due(const FlowParams& p, int k) { return p.snapshot_every > 0 && k % p.snapshot_every == 0; }

}  // namespace detail

struct ParticleFlow {
  EuclideanCloud state;
  FlowTrace trace;
};

// JKO with the SW_2^2 proximity term on particle positions. Each outer step
// fixes its slices and runs plain gradient descent, keeping the best iterate
// (the start point included) so the objective never exceeds F(mu_k).
inline ParticleFlow swjko_particles(const EuclideanCloud& initial, const Functional& f, const FlowParams& p) {
  validate(p);
  require(f.entropy == 0.0, ErrorKind::kUnsupported, "entropy needs a density; use the grid scheme");
  ParticleFlow out{initial, {}};
  const double energy0 = eval_functional(f, initial);
  out.trace.records.push_back({0, energy0, energy0, detail::rms(particle_velocity(f, initial)),
                               detail::snapshot_due(p, 0) ? std::optional<Matrix>(initial.points) : std::nullopt});
  const double coupling = p.dilation / (2.0 * p.tau);
  std::vector<double> inv_w(initial.weights.size());
  for (std::size_t i = 0; i < inv_w.size(); ++i) inv_w[i] = initial.weights[i] > 0.0 ? 1.0 / initial.weights[i] : 0.0;
  auto gradient = [&](const EuclideanCloud& x, const EuclideanCloud& prev, const DirectionSet& dirs) {
    Matrix g = sw2_position_gradient(x, prev, dirs);
    for (Eigen::Index i = 0; i < g.rows(); ++i) g.row(i) *= coupling * inv_w[static_cast<std::size_t>(i)];
    return (g + particle_velocity(f, x)).eval();
  };
  for (int k = 1; k <= p.steps; ++k) {
    const EuclideanCloud prev = out.state;
    const auto dirs = sample_directions(prev.dim(), p.slices, detail::step_seed(p.seed, k));
    EuclideanCloud x = prev, best = prev;
    double best_j = eval_functional(f, prev);
    for (int it = 0; it < p.inner_iters; ++it) {
      x.points -= p.lr * gradient(x, prev, dirs);
      const double j = coupling * sw_p(x, prev, dirs, 2.0) + eval_functional(f, x);
      if (j < best_j) {
        best_j = j;
        best = x;
      }
    }
    out.state = best;
    out.trace.records.push_back({k, eval_functional(f, best), best_j, detail::rms(gradient(best, prev, dirs)),
                                 detail::snapshot_due(p, k) ? std::optional<Matrix>(best.points) : std::nullopt});
  }
  return out;
}

struct GridFlow {
  GridState state;
  FlowTrace trace;
};

inline GridFlow swjko_grid(const GridState& initial, const Functional& f, const FlowParams& p) {
  validate(p);
  GridFlow out{initial, {}};
  const double energy0 = eval_functional(f, initial);
  out.trace.records.push_back({0, energy0, energy0, 0.0, std::nullopt});
  const double coupling = p.dilation / (2.0 * p.tau);
  const Eigen::Index d = initial.nodes.cols();
  auto objective = [&](const GridState& s, const GridState& prev, const DirectionSet& dirs) {
    return coupling * sw_p(make_cloud(s.nodes, s.rho), make_cloud(prev.nodes, prev.rho), dirs, 2.0) + eval_functional(f, s);
  };
  auto gradient = [&](const GridState& s, const GridState& prev, const DirectionSet& dirs) {
    auto g = grid_gradient(f, s);
    const auto c = detail::sw2_weight_gradient(prev.nodes, prev.rho, s.nodes, s.rho, dirs);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += coupling * c[i];
    return g;
  };
  for (int k = 1; k <= p.steps; ++k) {
    const GridState prev = out.state;
    const auto dirs = sample_directions(d, p.slices, detail::step_seed(p.seed, k));
    // Projected gradient with backtracking: the coupling term is polyhedral
    // in rho on a grid, so no fixed rate suits every iterate. The rate starts
    // at lr, halves on failure and doubles back (up to lr) on success.
    GridState best = prev;
    double best_j = eval_functional(f, prev);
    double step = p.lr;
    for (int it = 0; it < p.inner_iters; ++it) {
      const auto g = gradient(best, prev, dirs);
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) v[i] = best.rho[i] - step * g[i];
        GridState cand{best.nodes, simplex_project(v), best.cell_volume};
        const double j = objective(cand, prev, dirs);
        if (j < best_j) {
          best_j = j;
          best = std::move(cand);
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      step = std::min(2.0 * step, p.lr);
    }
    out.state = best;
    // Residual: projected-gradient step length per unit rate.
    auto g = gradient(best, prev, dirs);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = best.rho[i] - p.lr * g[i];
    const auto proj = simplex_project(g);
    std::vector<double> res(proj.size());
    for (std::size_t i = 0; i < res.size(); ++i) res[i] = (best.rho[i] - proj[i]) / p.lr;
    out.trace.records.push_back({k, eval_functional(f, best), best_j, detail::rms(res), std::nullopt});
  }
  return out;
}

// Forward Euler x <- x - tau * grad_W F(x).
inline ParticleFlow euler_particles(const EuclideanCloud& initial, const Functional& f, const FlowParams& p) {
  validate(p);
  ParticleFlow out{initial, {}};
  for (int k = 0;; ++k) {
    const Matrix v = particle_velocity(f, out.state);
    const double e = eval_functional(f, out.state);
    out.trace.records.push_back({k, e, e, detail::rms(v),
                                 detail::snapshot_due(p, k) ? std::optional<Matrix>(out.state.points) : std::nullopt});
    if (k == p.steps) break;
    out.state.points -= p.tau * v;
  }
  return out;
}

namespace detail {

// Ambient gradient of the geodesic coordinate atanh(<x_s, v> / x_0).
inline Vector geodesic_coordinate_grad_lorentz(const Vector& x, const Vector& v) {
  const double c = x.tail(x.size() - 1).dot(v);
  const double r = c / x(0);
  const double s = 1.0 / std::max(1.0 - r * r, 1e-300);
  Vector g(x.size());
  g(0) = -s * c / (x(0) * x(0));
  g.tail(x.size() - 1) = s * v / x(0);
  return g;
}

}  // namespace detail

struct HyperbolicFlow {
  HyperbolicCloud state;  // Lorentz model
  FlowTrace trace;
};

inline double eval_functional(const Functional& f, const HyperbolicCloud& c) {
  require(!f.potential && f.interaction == 0.0 && f.entropy == 0.0 && !f.target, ErrorKind::kUnsupported,
          "only the sliced target term is available on hyperbolic clouds");
  return f.hyperbolic_target ? ghsw(c, *f.hyperbolic_target, f.target_dirs, 2.0) : 0.0;
}

// Explicit Riemannian descent of GHSW_2^2 to the target on the hyperboloid.
inline HyperbolicFlow euler_particles(const HyperbolicCloud& initial, const Functional& f, const FlowParams& p) {
  validate(p);
  HyperbolicFlow out{to_lorentz(initial), {}};
  const Eigen::Index n = out.state.size();
  auto egrad = [&](const HyperbolicCloud& c) {
    Matrix g = Matrix::Zero(n, c.points.cols());
    if (!f.hyperbolic_target) return g;
    const auto& t = *f.hyperbolic_target;
    const Eigen::Index L = f.target_dirs.count();
    std::vector<Matrix> per(static_cast<std::size_t>(L));
    parallel_for(per.size(), [&](std::size_t l) {
      const Vector v = f.target_dirs.dirs.row(static_cast<Eigen::Index>(l)).transpose();
      const auto dx = w2_position_gradient(project_hyperbolic(c, HyperbolicProjection::kGeodesic, v), c.weights,
                                           project_hyperbolic(t, HyperbolicProjection::kGeodesic, v), t.weights);
      Matrix m(n, c.points.cols());
      for (Eigen::Index i = 0; i < n; ++i) {
        const double w = c.weights[static_cast<std::size_t>(i)];
        const double coef = w > 0.0 ? dx[static_cast<std::size_t>(i)] / w : 0.0;
        m.row(i) = coef * detail::geodesic_coordinate_grad_lorentz(c.points.row(i).transpose(), v).transpose();
      }
      per[l] = m;
    });
    for (const auto& m : per) g += m / static_cast<double>(L);
    return g;
  };
  for (int k = 0;; ++k) {
    const double e = eval_functional(f, out.state);
    const Matrix g = egrad(out.state);
    out.trace.records.push_back({k, e, e, detail::rms(g),
                                 detail::snapshot_due(p, k) ? std::optional<Matrix>(out.state.points) : std::nullopt});
    if (k == p.steps) break;
    for (Eigen::Index i = 0; i < n; ++i)
      out.state.points.row(i) = riemannian_step_lorentz(out.state.points.row(i).transpose(), g.row(i).transpose(), p.tau).transpose();
  }
  return out;
}

}  // namespace msot
