// msot: batch front end for the sliced and unbalanced transport library.
//
//   msot dist   <kind> A.csv B.csv      one distance, JSON out
//   msot matrix <kind> A.csv B.csv ...  pairwise loss matrix, JSON out
//   msot flow   init.csv                flow trace, JSON lines out
//   msot pca    gaussians.csv           1D-Gaussian principal rays, JSON out
//   msot gw     <kind> ...              couplings for GW-type problems
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msot/busemann.hpp"
#include "msot/euclidean.hpp"
#include "msot/flows.hpp"
#include "msot/gw.hpp"
#include "msot/hyperbolic.hpp"
#include "msot/io.hpp"
#include "msot/spd.hpp"
#include "msot/sphere.hpp"
#include "msot/unbalanced.hpp"

using json = nlohmann::json;
using namespace msot;

namespace {

// Anything wrong with an input file is an input error, whatever its kind.
struct InputFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Dataset load(const std::string& path, Geometry g) {
  try {
    return load_dataset(path, g);
  } catch (const Error& e) {
    throw InputFailure(e.what());
  }
}

struct RunConfig {
  std::string geometry = "euclidean";
  double p = 2.0;
  int projections = 200;
  std::uint64_t seed = 0;
  double rho1 = 1.0;
  double rho2 = 1.0;
  double tau = 0.05;
  int steps = 20;
  double eps = 1e-6;
  std::string out;
};

json config_echo(const RunConfig& c) {
  return {{"geometry", c.geometry}, {"p", c.p},       {"projections", c.projections}, {"seed", c.seed},
          {"rho1", c.rho1},         {"rho2", c.rho2}, {"tau", c.tau},                 {"steps", c.steps},
          {"eps", c.eps}};
}

void add_common(CLI::App* app, RunConfig& c) {
  app->add_option("--geometry", c.geometry, "euclidean|lorentz|poincare|spd|sphere|circle")->capture_default_str();
  app->add_option("--p", c.p, "ground cost order")->capture_default_str();
  app->add_option("--projections,-L", c.projections, "number of slices")->capture_default_str();
  app->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  app->add_option("--eps", c.eps, "tolerance of the circle binary search")->capture_default_str();
  app->add_option("--out,-o", c.out, "output file (default stdout)");
}

void emit(const RunConfig& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(c.out);
  require(os.good(), ErrorKind::kInvalidInput, c.out + ": cannot open for writing");
  os << text;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json matrix_json(const Matrix& m) {
  auto rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_std(m.row(i).transpose()));
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  require(j.is_array() && !j.empty() && j[0].is_array(), ErrorKind::kInvalidInput, what + " must be a nested array");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].size() == j[0].size(), ErrorKind::kInvalidInput, what + " rows differ in length");
    for (std::size_t k = 0; k < j[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Distances.

const std::map<std::string, std::vector<Geometry>>& distance_kinds() {
  static const std::map<std::string, std::vector<Geometry>> kinds{
      {"sw", {Geometry::kEuclidean, Geometry::kCircle}},
      {"ghsw", {Geometry::kLorentz, Geometry::kPoincare}},
      {"hhsw", {Geometry::kLorentz, Geometry::kPoincare}},
      {"spdsw", {Geometry::kSpd}},
      {"hspdsw", {Geometry::kSpd}},
      {"logsw", {Geometry::kSpd}},
      {"ssw", {Geometry::kSphere}},
      {"suot", {Geometry::kEuclidean, Geometry::kLorentz, Geometry::kPoincare}},
      {"usw", {Geometry::kEuclidean, Geometry::kLorentz, Geometry::kPoincare}},
      {"gw1d", {Geometry::kEuclidean}},
      {"hw", {Geometry::kEuclidean}},
  };
  return kinds;
}

void check_kind(const std::string& kind, Geometry g) {
  const auto& kinds = distance_kinds();
  const auto it = kinds.find(kind);
  require(it != kinds.end(), ErrorKind::kInvalidInput, "unknown distance '" + kind + "'");
  bool ok = false;
  std::string allowed;
  for (auto a : it->second) {
    ok = ok || a == g;
    allowed += std::string(allowed.empty() ? "" : "|") + to_string(a);
  }
  require(ok, ErrorKind::kUnsupported,
          "'" + kind + "' does not apply to " + to_string(g) + " data (expected " + allowed + ")");
}

// Slices drawn once per dimension and reused for every pair.
class SliceCache {
 public:
  SliceCache(Eigen::Index L, std::uint64_t seed) : L_(L), seed_(seed) {}

  const DirectionSet& directions(Eigen::Index d) {
    auto it = dirs_.find(d);
    if (it == dirs_.end()) it = dirs_.emplace(d, sample_directions(d, L_, seed_)).first;
    return it->second;
  }
  const std::vector<Matrix>& symmetric(Eigen::Index d) {
    auto it = sym_.find(d);
    if (it == sym_.end()) it = sym_.emplace(d, sample_unit_symmetric(d, L_, seed_)).first;
    return it->second;
  }
  const std::vector<Matrix>& frames(Eigen::Index d) {
    auto it = frames_.find(d);
    if (it == frames_.end()) it = frames_.emplace(d, sample_stiefel(d, L_, seed_)).first;
    return it->second;
  }

 private:
  Eigen::Index L_;
  std::uint64_t seed_;
  std::map<Eigen::Index, DirectionSet> dirs_;
  std::map<Eigen::Index, std::vector<Matrix>> sym_;
  std::map<Eigen::Index, std::vector<Matrix>> frames_;
};

UnbalancedParams unbalanced_params(const RunConfig& c) {
  UnbalancedParams prm;
  prm.rho1 = c.rho1;
  prm.rho2 = c.rho2;
  prm.p = c.p;
  prm.iterations = c.steps;
  return prm;
}

SlicedProjections unbalanced_projections(const Dataset& a, const Dataset& b, SliceCache& slices) {
  if (a.geometry == Geometry::kEuclidean) {
    const auto mu = as_euclidean(a), nu = as_euclidean(b);
    return project_euclidean(mu, nu, slices.directions(mu.dim()));
  }
  const auto mu = as_hyperbolic(a), nu = as_hyperbolic(b);
  return project_hyperbolic_pair(mu, nu, slices.directions(mu.dim()), HyperbolicProjection::kGeodesic);
}

std::pair<std::vector<double>, std::vector<double>> sorted_line(const Dataset& d) {
  require(d.points.cols() == 1, ErrorKind::kInvalidInput, d.path + ": gw1d needs one coordinate column");
  std::vector<std::size_t> order(static_cast<std::size_t>(d.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) {
    return d.points(static_cast<Eigen::Index>(i), 0) < d.points(static_cast<Eigen::Index>(j), 0);
  });
  std::vector<double> x, w;
  for (auto i : order) {
    x.push_back(d.points(static_cast<Eigen::Index>(i), 0));
    w.push_back(d.weights[i]);
  }
  return {x, w};
}

// Value plus kind-specific extras.
json compute_distance(const std::string& kind, const Dataset& a, const Dataset& b, const RunConfig& c,
                      SliceCache& slices, bool details) {
  json out;
  if (kind == "sw" && a.geometry == Geometry::kCircle) {
    const std::vector<double> xa = to_std(a.points.col(0)), xb = to_std(b.points.col(0));
    const auto pm = build_circle_profile(xa, a.weights);
    const auto pn = build_circle_profile(xb, b.weights);
    out["value"] = c.p == 1.0 ? circle_w1_level_median(pm, pn) : circle_wp_binary_search(pm, pn, c.p, c.eps);
    out["exact"] = true;
  } else if (kind == "sw") {
    const auto mu = as_euclidean(a), nu = as_euclidean(b);
    out["value"] = sw_p(mu, nu, slices.directions(mu.dim()), c.p);
  } else if (kind == "ghsw" || kind == "hhsw") {
    const auto mu = as_hyperbolic(a), nu = as_hyperbolic(b);
    const auto& dirs = slices.directions(mu.dim());
    out["value"] = kind == "ghsw" ? ghsw(mu, nu, dirs, c.p) : hhsw(mu, nu, dirs, c.p);
  } else if (kind == "spdsw" || kind == "hspdsw") {
    const auto mu = as_spd(a), nu = as_spd(b);
    const auto& sl = slices.symmetric(mu.dim());
    out["value"] = kind == "spdsw" ? spdsw(mu, nu, sl, c.p) : hspdsw(mu, nu, sl, c.p);
  } else if (kind == "logsw") {
    const auto mu = as_spd(a), nu = as_spd(b);
    const Eigen::Index d = mu.dim();
    out["value"] = logsw(mu, nu, slices.directions(d * (d + 1) / 2), c.p);
  } else if (kind == "ssw") {
    const auto mu = as_sphere(a), nu = as_sphere(b);
    out["value"] = ssw(mu, nu, slices.frames(mu.dim()), c.p, c.eps);
  } else if (kind == "suot") {
    const auto proj = unbalanced_projections(a, b, slices);
    const auto prm = unbalanced_params(c);
    const auto r = suot(proj, a.weights, b.weights, prm);
    out["value"] = r.value;
    if (details) {
      std::vector<double> ma(a.weights.size(), 0.0), mb(b.weights.size(), 0.0);
      for (const auto& pot : r.potentials) {
        const auto rw = norm_reweight(a.weights, b.weights, pot, prm.rho1, prm.rho2);
        for (std::size_t i = 0; i < ma.size(); ++i) ma[i] += rw.source[i] / static_cast<double>(r.potentials.size());
        for (std::size_t j = 0; j < mb.size(); ++j) mb[j] += rw.target[j] / static_cast<double>(r.potentials.size());
      }
      out["marginals"] = {{"source", ma}, {"target", mb}};
      out["dual"] = {{"trace", r.trace}, {"slices", r.potentials.size()}};
    }
  } else if (kind == "usw") {
    const auto proj = unbalanced_projections(a, b, slices);
    const auto r = usw(proj, a.weights, b.weights, unbalanced_params(c));
    out["value"] = r.value;
    if (details) {
      out["marginals"] = {{"source", r.marginals.source}, {"target", r.marginals.target}};
      auto range = [](const std::vector<double>& v) {
        return json{{"min", *std::min_element(v.begin(), v.end())}, {"max", *std::max_element(v.begin(), v.end())}};
      };
      out["dual"] = {{"trace", r.trace}, {"f", range(r.potentials.f)}, {"g", range(r.potentials.g)}};
    }
  } else if (kind == "gw1d") {
    const auto [x, wa] = sorted_line(a);
    const auto [y, wb] = sorted_line(b);
    out["value"] = gw1d_inner(x, wa, y, wb).value;
  } else if (kind == "hw") {
    HwParams prm;
    prm.iterations = c.steps;
    out["value"] = hw_solve(a.points, b.points, a.weights, b.weights, prm).value;
  }
  return out;
}

bool uses_slices(const std::string& kind, Geometry g) {
  return !(kind == "gw1d" || kind == "hw" || (kind == "sw" && g == Geometry::kCircle));
}

int run_dist(const std::string& kind, const std::string& fa, const std::string& fb, const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Geometry g = parse_geometry(c.geometry);
  check_kind(kind, g);
  require(c.projections >= 1, ErrorKind::kInvalidInput, "--projections must be at least 1");
  const auto a = load(fa, g), b = load(fb, g);
  SliceCache slices(c.projections, c.seed);
  json out = compute_distance(kind, a, b, c, slices, true);
  json result{{"command", "dist"}, {"kind", kind}, {"inputs", {fa, fb}}};
  result.update(out);
  result["p"] = c.p;
  result["L"] = uses_slices(kind, g) ? json(c.projections) : json(nullptr);
  result["seed"] = c.seed;
  result["config"] = config_echo(c);
  result["wallclock_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  emit(c, result.dump(2) + "\n");
  return 0;
}

int run_matrix(const std::string& kind, const std::vector<std::string>& files, const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Geometry g = parse_geometry(c.geometry);
  check_kind(kind, g);
  require(files.size() >= 2, ErrorKind::kInvalidInput, "matrix needs at least two datasets");
  std::vector<Dataset> data;
  for (const auto& f : files) data.push_back(load(f, g));
  SliceCache slices(c.projections, c.seed);
  const auto n = static_cast<Eigen::Index>(data.size());
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = data[static_cast<std::size_t>(i)];
      const auto& b = data[static_cast<std::size_t>(j)];
      m(i, j) = m(j, i) = compute_distance(kind, a, b, c, slices, false)["value"].get<double>();
    }
  json result{{"command", "matrix"}, {"kind", kind},   {"inputs", files},
              {"matrix", matrix_json(m)}, {"p", c.p}, {"seed", c.seed}};
  result["L"] = uses_slices(kind, g) ? json(c.projections) : json(nullptr);
  result["config"] = config_echo(c);
  result["wallclock_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  emit(c, result.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// Flows.

struct FlowOptions {
  std::string functional = "zero";
  std::string scheme = "euler";
  std::string target;
  double lr = 1e-2;
  int inner = 50;
  int snapshot_every = 0;
  double cell_volume = 1.0;
  double dilation = 1.0;
};

Functional quadratic_potential() {
  return Functional::potential_energy([](const Vector& x) { return 0.5 * x.squaredNorm(); },
                                      [](const Vector& x) { return x; });
}

int run_flow(const std::string& init, const RunConfig& c, const FlowOptions& o) {
  const Geometry g = parse_geometry(c.geometry);
  FlowParams prm;
  prm.tau = c.tau;
  prm.steps = c.steps;
  prm.lr = o.lr;
  prm.inner_iters = o.inner;
  prm.slices = c.projections;
  prm.seed = c.seed;
  prm.dilation = o.dilation;
  prm.snapshot_every = o.snapshot_every;
  validate(prm);
  const auto data = load(init, g);
  FlowTrace trace;

  if (g == Geometry::kLorentz || g == Geometry::kPoincare) {
    require(o.functional == "target" && o.scheme == "euler", ErrorKind::kUnsupported,
            "hyperbolic flows support only --functional target with --scheme euler");
    require(!o.target.empty(), ErrorKind::kInvalidInput, "--target is required");
    const auto start = as_hyperbolic(data);
    const auto tgt = as_hyperbolic(load(o.target, g));
    const auto f = Functional::ghsw_to_target(tgt, sample_directions(tgt.dim(), c.projections, c.seed));
    trace = euler_particles(start, f, prm).trace;
  } else {
    require(g == Geometry::kEuclidean, ErrorKind::kUnsupported, "flows run on euclidean or hyperbolic data");
    Functional f;
    if (o.functional == "zero") {
      f = Functional::zero();
    } else if (o.functional == "potential") {
      f = quadratic_potential();
    } else if (o.functional == "interaction") {
      f = Functional::interaction_energy();
    } else if (o.functional == "fokker-planck") {
      f = quadratic_potential() + Functional::entropy_on_grid();
    } else if (o.functional == "target") {
      require(!o.target.empty(), ErrorKind::kInvalidInput, "--target is required");
      const auto tgt = as_euclidean(load(o.target, g));
      f = Functional::sw_to_target(tgt, sample_directions(tgt.dim(), c.projections, c.seed));
    } else {
      fail(ErrorKind::kInvalidInput, "unknown functional '" + o.functional + "'");
    }
    if (o.scheme == "grid") {
      const auto state = make_grid_state(data.points, data.weights, o.cell_volume);
      trace = swjko_grid(state, f, prm).trace;
    } else if (o.scheme == "jko") {
      trace = swjko_particles(as_euclidean(data), f, prm).trace;
    } else if (o.scheme == "euler") {
      trace = euler_particles(as_euclidean(data), f, prm).trace;
    } else {
      fail(ErrorKind::kInvalidInput, "unknown scheme '" + o.scheme + "'");
    }
  }
  std::ostringstream os;
  write_trace(os, trace);
  emit(c, os.str());
  return 0;
}

// ---------------------------------------------------------------------------
// PCA of 1D Gaussians.

int run_pca(const std::string& file, const RunConfig& c, const std::vector<double>& origin) {
  const auto data = load(file, Geometry::kEuclidean);
  require(data.points.cols() == 2, ErrorKind::kInvalidInput, file + ": expected two columns (mean, std)");
  std::vector<std::pair<double, double>> ms;
  for (Eigen::Index i = 0; i < data.size(); ++i) ms.emplace_back(data.points(i, 0), data.points(i, 1));
  require(origin.empty() || origin.size() == 2, ErrorKind::kInvalidInput, "--origin takes m,s");
  const auto [m0, s0] = origin.empty() ? gaussian_barycenter_1d(ms) : std::pair{origin[0], origin[1]};
  const auto pca = gaussian_pca_1d(ms, m0, s0);
  auto ray = [](const GaussianRay& r) { return json{{"m0", r.m0}, {"s0", r.s0}, {"m1", r.m1}, {"s1", r.s1}}; };
  json result{{"command", "pca"},
              {"inputs", {file}},
              {"origin", {m0, s0}},
              {"theta", pca.theta},
              {"M", matrix_json(pca.M)},
              {"components", {ray(pca.first), ray(pca.second)}},
              {"scores", {pca.scores_first, pca.scores_second}}};
  emit(c, result.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// GW couplings.

int run_gw(const std::string& kind, const std::vector<std::string>& files, const RunConfig& c,
           const std::vector<double>& axis_weights) {
  json result{{"command", "gw"}, {"kind", kind}, {"inputs", files}};
  if (kind == "gw1d" || kind == "hw") {
    require(files.size() == 2, ErrorKind::kInvalidInput, kind + " needs two CSV files");
    const auto a = load(files[0], Geometry::kEuclidean), b = load(files[1], Geometry::kEuclidean);
    if (kind == "gw1d") {
      const auto [x, wa] = sorted_line(a);
      const auto [y, wb] = sorted_line(b);
      const auto r = gw1d_inner(x, wa, y, wb);
      result["value"] = r.value;
      result["source_points"] = x;
      result["target_points"] = y;
      result["coupling"] = matrix_json(r.coupling.plan);
    } else {
      HwParams prm;
      prm.iterations = c.steps;
      if (!axis_weights.empty()) prm.axis_weights = Eigen::Map<const Vector>(axis_weights.data(), axis_weights.size());
      const auto r = hw_solve(a.points, b.points, a.weights, b.weights, prm);
      result["value"] = r.value;
      result["trace"] = r.trace;
      result["coupling"] = matrix_json(r.coupling.plan);
    }
  } else if (kind == "mk" || kind == "mi") {
    require(files.size() == 1, ErrorKind::kInvalidInput, kind + " needs one JSON file");
    std::ifstream in(files[0]);
    require(in.good(), ErrorKind::kInvalidInput, files[0] + ": cannot open file");
    json problem;
    try {
      problem = json::parse(in);
    } catch (const json::exception& e) {
      fail(ErrorKind::kInvalidInput, files[0] + ": " + e.what());
    }
    for (const char* key : {"Sigma", "Lambda", "VE", "VF"})
      require(problem.contains(key), ErrorKind::kInvalidInput, files[0] + ": missing '" + key + "'");
    const GaussianSubspaces pair{matrix_from_json(problem["Sigma"], "Sigma"), matrix_from_json(problem["Lambda"], "Lambda"),
                                 matrix_from_json(problem["VE"], "VE"), matrix_from_json(problem["VF"], "VF")};
    if (kind == "mk") {
      const auto mk = mk_gaussian(pair);
      result["B"] = matrix_json(mk.B);
      result["residual"] = (mk.B * pair.Sigma * mk.B.transpose() - pair.Lambda).norm();
    } else {
      result["Gamma"] = matrix_json(mi_gaussian(pair));
    }
  } else {
    fail(ErrorKind::kInvalidInput, "unknown gw problem '" + kind + "' (gw1d|hw|mk|mi)");
  }
  result["config"] = config_echo(c);
  emit(c, result.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliced, unbalanced and Gromov-Wasserstein transport tools"};
  app.require_subcommand(1);
  RunConfig cfg;

  std::string kind;
  std::vector<std::string> files;
  auto* dist = app.add_subcommand("dist", "distance between two datasets");
  dist->add_option("kind", kind, "sw|ghsw|hhsw|spdsw|hspdsw|logsw|ssw|suot|usw|gw1d|hw")->required();
  dist->add_option("files", files, "two CSV files")->required()->expected(2);
  add_common(dist, cfg);
  dist->add_option("--rho1", cfg.rho1, "source marginal penalty")->capture_default_str();
  dist->add_option("--rho2", cfg.rho2, "target marginal penalty")->capture_default_str();
  dist->add_option("--steps", cfg.steps, "Frank-Wolfe / conditional-gradient rounds")->capture_default_str();

  auto* mat = app.add_subcommand("matrix", "pairwise distance matrix");
  mat->add_option("kind", kind, "distance kind, as for dist")->required();
  mat->add_option("files", files, "CSV files")->required()->expected(2, -1);
  add_common(mat, cfg);
  mat->add_option("--rho1", cfg.rho1)->capture_default_str();
  mat->add_option("--rho2", cfg.rho2)->capture_default_str();
  mat->add_option("--steps", cfg.steps)->capture_default_str();

  FlowOptions fo;
  std::string init;
  auto* flow = app.add_subcommand("flow", "gradient flow of a functional");
  flow->add_option("init", init, "initial particles or grid CSV")->required();
  add_common(flow, cfg);
  flow->add_option("--functional", fo.functional, "zero|potential|interaction|fokker-planck|target")
      ->capture_default_str();
  flow->add_option("--scheme", fo.scheme, "euler|jko|grid")->capture_default_str();
  flow->add_option("--target", fo.target, "target CSV for --functional target");
  flow->add_option("--tau", cfg.tau, "step size")->capture_default_str();
  flow->add_option("--steps", cfg.steps, "outer steps")->capture_default_str();
  flow->add_option("--lr", fo.lr, "inner learning rate (jko, grid)")->capture_default_str();
  flow->add_option("--inner", fo.inner, "inner iterations (jko, grid)")->capture_default_str();
  flow->add_option("--snapshot-every", fo.snapshot_every, "record positions every k steps")->capture_default_str();
  flow->add_option("--cell-volume", fo.cell_volume, "grid cell volume")->capture_default_str();
  flow->add_option("--dilation", fo.dilation, "factor on the SW proximity term")->capture_default_str();

  std::vector<double> origin;
  auto* pca = app.add_subcommand("pca", "principal rays of 1D Gaussians given as mean,std rows");
  pca->add_option("file", init, "CSV with columns m,s")->required();
  pca->add_option("--origin", origin, "ray origin m s (default: barycenter)")->expected(2);
  pca->add_option("--out,-o", cfg.out, "output file (default stdout)");

  std::vector<double> axis_weights;
  auto* gw = app.add_subcommand("gw", "GW-type couplings");
  gw->add_option("kind", kind, "gw1d|hw|mk|mi")->required();
  gw->add_option("files", files, "two CSV files (gw1d, hw) or one JSON file (mk, mi)")->required()->expected(1, 2);
  gw->add_option("--steps", cfg.steps, "conditional-gradient rounds (hw)")->capture_default_str();
  gw->add_option("--axis-weights", axis_weights, "per-axis cost weights (hw)");
  gw->add_option("--out,-o", cfg.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (dist->parsed()) return run_dist(kind, files[0], files[1], cfg);
    if (mat->parsed()) return run_matrix(kind, files, cfg);
    if (flow->parsed()) return run_flow(init, cfg, fo);
    if (pca->parsed()) return run_pca(init, cfg, origin);
    if (gw->parsed()) return run_gw(kind, files, cfg, axis_weights);
  } catch (const InputFailure& e) {
    std::cerr << "msot: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "msot: " << e.what() << '\n';
    return is_input_error(e.kind()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "msot: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
