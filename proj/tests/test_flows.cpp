#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "msot/flows.hpp"
#include "oracles.hpp"

using namespace msot;

namespace {

Functional quadratic_potential(const Vector& center) {
  return Functional::potential_energy([center](const Vector& x) { return 0.5 * (x - center).squaredNorm(); },
                                      [center](const Vector& x) { return Vector(x - center); });
}

Matrix gaussian_points(int n, int d, std::uint64_t seed, double scale) {
  GaussianStream g(stream_rng(seed, 0));
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) x(i, k) = scale * g();
  return x;
}

double mean_radius(const Matrix& x) {
  double r = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) r += x.row(i).norm();
  return r / static_cast<double>(x.rows());
}

void expect_nonincreasing(const FlowTrace& t, double slack) {
  for (std::size_t k = 1; k < t.records.size(); ++k) EXPECT_LE(t.records[k].energy, t.records[k - 1].energy + slack) << k;
}

}  // namespace

TEST(Functionals, ClosedFormValues) {
  const auto inter = Functional::interaction_energy();
  EXPECT_EQ(eval_functional(inter, make_cloud(Matrix::Ones(1, 2))), 0.0);
  Matrix two(2, 2);
  two << 0, 0, 1, 0;
  EXPECT_NEAR(eval_functional(inter, make_cloud(two)), -1.0 / 16.0, 1e-15);

  Matrix e(2, 2);
  e << 1, 0, 0, 1;
  const auto pot = Functional::potential_energy([](const Vector& x) { return x.squaredNorm(); },
                                                [](const Vector& x) { return Vector(2 * x); });
  EXPECT_NEAR(eval_functional(pot, make_cloud(e)), 1.0, 1e-15);

  try {
    eval_functional(Functional::entropy_on_grid(), make_cloud(e));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kUnsupported);
  }
  EXPECT_THROW(Functional::interaction_energy(2, 4), Error);
}

TEST(Functionals, InteractionGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(6, 2, rng);
  const auto w = oracle::random_simplex(6, rng);
  const auto f = Functional::interaction_energy() + quadratic_potential(Vector::Ones(2));
  const Matrix v = particle_velocity(f, make_cloud(x, w));
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 2; ++k) {
      const double fd = oracle::central_difference(
          [&](double h) {
            Matrix y = x;
            y(i, k) += h;
            return eval_functional(f, make_cloud(y, w));
          },
          0.0, 1e-5);
      EXPECT_NEAR(v(i, k) * w[i], fd, 1e-8);
    }
}

TEST(Functionals, GridEntropyHandlesEmptyCells) {
  Matrix nodes(3, 1);
  nodes << 0, 1, 2;
  const auto s = make_grid_state(nodes, {0.5, 0.0, 0.5}, 0.5);
  EXPECT_NEAR(eval_functional(Functional::entropy_on_grid(), s), std::log(1.0), 1e-15);
  for (double g : grid_gradient(Functional::entropy_on_grid(), s)) EXPECT_TRUE(std::isfinite(g));
  EXPECT_THROW(make_grid_state(nodes, {0.5, 0.1, 0.5}, 0.5), Error);
}

TEST(SimplexProject, ExamplesAndVariationalInequality) {
  EXPECT_EQ(simplex_project(std::vector<double>{0.5, 0.5}), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(simplex_project(std::vector<double>{2, 0}), (std::vector<double>{1, 0}));
  EXPECT_EQ(simplex_project(std::vector<double>{1, 1}), (std::vector<double>{0.5, 0.5}));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(7);
    for (auto& x : v) x = 2 * n01(rng);
    const auto p = simplex_project(v);
    double s = 0;
    for (double x : p) {
      EXPECT_GE(x, 0.0);
      s += x;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    // <v - p, q - p> <= 0 for every q on the simplex.
    for (int r = 0; r < 20; ++r) {
      const auto q = oracle::random_simplex(7, rng);
      double ip = 0;
      for (int i = 0; i < 7; ++i) ip += (v[i] - p[i]) * (q[i] - p[i]);
      EXPECT_LE(ip, 1e-12);
    }
  }
}

TEST(SwGradient, WeightedMatchesFiniteDifferencesAndUniformCase) {
  std::mt19937_64 rng(3);
  const auto dirs = sample_directions(3, 20, 4);
  const auto mu = make_cloud(oracle::random_matrix(8, 3, rng));
  const auto nu = make_cloud(oracle::random_matrix(8, 3, rng, 2.0));
  EXPECT_LE((sw2_position_gradient(mu, nu, dirs) - sw2_subgradient(mu, nu, dirs)).norm(), 1e-12);

  const auto a = make_cloud(oracle::random_matrix(7, 3, rng), oracle::random_simplex(7, rng));
  const auto b = make_cloud(oracle::random_matrix(5, 3, rng, 2.0), oracle::random_simplex(5, rng));
  const Matrix g = sw2_position_gradient(a, b, dirs);
  for (int i = 0; i < 7; ++i)
    for (int k = 0; k < 3; ++k) {
      const double fd = oracle::central_difference(
          [&](double h) {
            auto c = a;
            c.points(i, k) += h;
            return sw_p(c, b, dirs, 2);
          },
          0.0, 1e-6);
      EXPECT_NEAR(g(i, k), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST(SwJkoParticles, ZeroFunctionalIsStatic) {
  const auto c = make_cloud(gaussian_points(30, 2, 5, 1.0));
  FlowParams p;
  p.steps = 3;
  const auto r = swjko_particles(c, Functional::zero(), p);
  EXPECT_LE((r.state.points - c.points).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SwJkoParticles, TargetEqualToInitialKeepsTraceConstant) {
  const auto c = make_cloud(gaussian_points(30, 2, 6, 1.0));
  FlowParams p;
  p.steps = 3;
  const auto r = swjko_particles(c, Functional::sw_to_target(c, sample_directions(2, 20, 7)), p);
  for (const auto& rec : r.trace.records) EXPECT_EQ(rec.energy, 0.0);
  EXPECT_THROW(swjko_particles(c, Functional::entropy_on_grid(), p), Error);
}

TEST(SwJkoParticles, AggregationEnergyNonincreasing) {
  const auto c = make_cloud(gaussian_points(80, 2, 8, std::sqrt(0.005)));
  FlowParams p;
  p.tau = 0.05;
  p.steps = 15;
  p.lr = 0.05;
  p.inner_iters = 20;
  p.slices = 50;
  const auto r = swjko_particles(c, Functional::interaction_energy(), p);
  ASSERT_EQ(r.trace.records.size(), 16u);
  expect_nonincreasing(r.trace, 1e-8);
  EXPECT_LT(r.trace.records.back().energy, r.trace.records.front().energy);
}

TEST(SwJkoParticles, DilatedSchemeTracksWassersteinFlow) {
  // Potential 0.5 |x|^2: the Wasserstein flow mean is m0 exp(-t).
  Matrix x = gaussian_points(100, 2, 9, 1.0);
  x.col(0).array() += 3.0;
  x.col(1).array() -= 2.0;
  const Eigen::RowVectorXd m0 = x.colwise().mean();
  FlowParams p;
  p.tau = 0.05;
  p.steps = 20;
  p.lr = 0.02;
  p.inner_iters = 30;
  p.slices = 30;
  p.dilation = 2.0;
  p.snapshot_every = 10;
  const auto r = swjko_particles(make_cloud(x), quadratic_potential(Vector::Zero(2)), p);
  int checked = 0;
  for (const auto& rec : r.trace.records) {
    if (!rec.positions || rec.step == 0) continue;
    const double t = rec.step * p.tau;
    const Eigen::RowVectorXd expect = m0 * std::exp(-t);
    const Eigen::RowVectorXd got = rec.positions->colwise().mean();
    EXPECT_LE((got - expect).norm(), 0.1 * expect.norm()) << "t = " << t;
    ++checked;
  }
  EXPECT_EQ(checked, 2);
}

namespace {

struct FokkerPlanckGrid {
  GridState initial;
  std::vector<double> stationary;
  Functional functional;
};

FokkerPlanckGrid fokker_planck_grid() {
  const int n = 81;
  const double lo = -4, l = 0.1;
  Matrix nodes(n, 1);
  std::vector<double> r0(n), rs(n);
  double s0 = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + i * l;
    nodes(i, 0) = x;
    s0 += r0[i] = std::exp(-0.5 * (x + 1) * (x + 1));
    ss += rs[i] = std::exp(-0.5 * (x - 1) * (x - 1));  // e^{-V}, V = (x - 1)^2 / 2
  }
  for (int i = 0; i < n; ++i) {
    r0[i] /= s0;
    rs[i] /= ss;
  }
  auto f = quadratic_potential(Vector::Ones(1)) + Functional::entropy_on_grid();
  return {make_grid_state(nodes, r0, l), rs, f};
}

double kl(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > 0) s += a[i] * std::log(a[i] / b[i]);
  return s;
}

}  // namespace

TEST(SwJkoGrid, FokkerPlanckApproachesStationaryDensity) {
  const auto fp = fokker_planck_grid();
  FlowParams p;
  p.tau = 0.2;
  p.steps = 30;
  p.lr = 1e-2;
  p.inner_iters = 100;
  p.slices = 1;
  const auto r = swjko_grid(fp.initial, fp.functional, p);
  const double before = kl(fp.initial.rho, fp.stationary), after = kl(r.state.rho, fp.stationary);
  EXPECT_LE(after, before / 10) << before << " -> " << after;
  expect_nonincreasing(r.trace, 1e-8);
  double s = 0;
  for (double v : r.state.rho) s += v;
  EXPECT_NEAR(s, 1.0, 1e-10);
}

TEST(SwJkoGrid, SingleNodeStays) {
  const auto s = make_grid_state(Matrix::Zero(1, 2), {1.0}, 1.0);
  FlowParams p;
  p.steps = 3;
  const auto r = swjko_grid(s, quadratic_potential(Vector::Ones(2)) + Functional::entropy_on_grid(), p);
  EXPECT_EQ(r.state.rho, std::vector<double>{1.0});
}

TEST(EulerParticles, ZeroFunctionalIsStatic) {
  const auto c = make_cloud(gaussian_points(20, 3, 10, 1.0));
  FlowParams p;
  p.steps = 5;
  EXPECT_EQ(euler_particles(c, Functional::zero(), p).state.points, c.points);
}

TEST(EulerParticles, AggregationReachesRingOfRadiusOneOverSqrtThree) {
  // Stationarity on a uniform ring of radius R: R (3 R^2 - 1) = 0.
  const auto c = make_cloud(gaussian_points(300, 2, 11, std::sqrt(0.005)));
  FlowParams p;
  p.tau = 0.05;
  p.steps = 200;
  const auto r = euler_particles(c, Functional::interaction_energy(), p);
  EXPECT_NEAR(mean_radius(r.state.points), 1.0 / std::sqrt(3.0), 0.01);
  EXPECT_LT(r.trace.records.back().energy, r.trace.records.front().energy);
}

TEST(EulerParticles, HyperbolicSlicedFlowApproachesTarget) {
  const int n = 32;
  const Matrix cov = 0.1 * Matrix::Identity(2, 2);
  const Vector target_mean = poincare_to_lorentz(Eigen::Vector2d(0.5, 0.3));
  const Vector start_mean = poincare_to_lorentz(Eigen::Vector2d(-0.4, -0.2));
  const auto target = sample_wrapped_normal(target_mean, cov, n, 12);
  const auto start = sample_wrapped_normal(start_mean, cov, n, 13);
  const auto f = Functional::ghsw_to_target(target, sample_directions(2, 200, 14));
  FlowParams p;
  p.tau = 0.5;
  p.steps = 200;
  p.snapshot_every = 40;
  const auto r = euler_particles(start, f, p);
  auto log_w2 = [&](const Matrix& pts) {
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double d = lorentz_distance(pts.row(i).transpose(), target.points.row(j).transpose());
        c(i, j) = d * d;
      }
    return 0.5 * std::log(oracle::hungarian_assignment(c));
  };
  std::vector<double> curve;
  for (const auto& rec : r.trace.records)
    if (rec.positions) curve.push_back(log_w2(*rec.positions));
  ASSERT_EQ(curve.size(), 6u);
  for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_LT(curve[k], curve[k - 1] + 1e-9) << k;
  EXPECT_LT(curve.back(), curve.front() - 1.0);
  for (Eigen::Index i = 0; i < n; ++i) EXPECT_TRUE(on_hyperboloid(r.state.points.row(i).transpose()));

  const auto ec = make_cloud(Matrix::Zero(3, 2));
  EXPECT_THROW(euler_particles(ec, f, p), Error);
  EXPECT_THROW(euler_particles(start, Functional::interaction_energy(), p), Error);
}

TEST(EulerParticles, HungarianOracleAgreesWithBruteForce) {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd c = oracle::random_matrix(6, 6, rng).cwiseAbs();
    EXPECT_NEAR(oracle::hungarian_assignment(c), oracle::brute_force_assignment(c), 1e-12);
  }
}

TEST(FlowTrace, SerializationRoundTrips) {
  FlowTrace t;
  std::mt19937_64 rng(16);
  for (int k = 0; k < 4; ++k) {
    FlowRecord r{k, std::sqrt(2.0) * k - 1.0 / 3.0, std::exp(-k) * 1e-17, std::nextafter(0.1, 1.0), std::nullopt};
    if (k % 2 == 0) r.positions = oracle::random_matrix(3, 2, rng);
    t.records.push_back(r);
  }
  std::stringstream ss;
  write_trace(ss, t);
  const auto back = read_trace(ss);
  ASSERT_EQ(back.records.size(), t.records.size());
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    EXPECT_EQ(back.records[k].step, t.records[k].step);
    EXPECT_EQ(back.records[k].energy, t.records[k].energy);
    EXPECT_EQ(back.records[k].objective, t.records[k].objective);
    EXPECT_EQ(back.records[k].grad_norm, t.records[k].grad_norm);
    ASSERT_EQ(back.records[k].positions.has_value(), t.records[k].positions.has_value());
    if (t.records[k].positions) EXPECT_EQ(*back.records[k].positions, *t.records[k].positions);
  }
  std::stringstream bad("{\"step\": 1, \"energy\": 0, \"objective\": 0, \"grad_norm\": 0}\n{\"step\": 1, \"energy\": 0, "
                        "\"objective\": 0, \"grad_norm\": 0}\n");
  EXPECT_THROW(read_trace(bad), Error);
}
