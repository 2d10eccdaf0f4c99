#include <gtest/gtest.h>

#include <random>

#include "msot/gw.hpp"
#include "oracles.hpp"

using namespace msot;

namespace {

// min over permutation plans of (1/n^2) sum_ik (x_i x_k - y_s(i) y_s(k))^2.
double brute_force_gw1d(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const double d = x[i] * x[k] - y[perm[i]] * y[perm[k]];
        s += d * d;
      }
    best = std::min(best, s / (n * n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Matrix naive_tensor(const Matrix& X, const Matrix& Y, const Matrix& g, const Vector& w) {
  Matrix out = Matrix::Zero(X.rows(), Y.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < Y.rows(); ++j)
      for (Eigen::Index k = 0; k < X.rows(); ++k)
        for (Eigen::Index l = 0; l < Y.rows(); ++l) {
          double c = 0.0;
          for (Eigen::Index t = 0; t < X.cols(); ++t) {
            const double d = X(i, t) * X(k, t) - Y(j, t) * Y(l, t);
            c += w(t) * d * d;
          }
          out(i, j) += c * g(k, l);
        }
  return out;
}

std::vector<double> sorted_normal(int n, std::mt19937_64& rng, double shift = 0.0) {
  std::normal_distribution<double> g(shift, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  std::sort(v.begin(), v.end());
  return v;
}

Matrix random_orthonormal(int d, int k, std::mt19937_64& rng) {
  return orthonormal_factor(oracle::random_matrix(d, k, rng));
}

}  // namespace

TEST(NwCorner, Examples) {
  const auto id = nw_corner(uniform_weights(4), uniform_weights(4));
  EXPECT_EQ(id.plan, Matrix(Matrix::Identity(4, 4) * 0.25));
  const std::vector<double> a{0.3, 0.7}, b{0.5, 0.5};
  const auto c = nw_corner(a, b);
  EXPECT_NEAR(c.plan(0, 0), 0.3, 1e-15);
  EXPECT_EQ(c.plan(0, 1), 0.0);
  EXPECT_NEAR(c.plan(1, 0), 0.2, 1e-15);
  EXPECT_NEAR(c.plan(1, 1), 0.5, 1e-15);
  EXPECT_TRUE(has_marginals(c, a, b));
  const std::vector<double> one{1.0}, two{0.4, 0.6};
  const auto r = nw_corner(one, two);
  EXPECT_EQ(r.plan(0, 0), 0.4);
  EXPECT_EQ(r.plan(0, 1), 0.6);
  const std::vector<double> bad{0.5, 0.6};
  EXPECT_THROW(nw_corner(a, bad), Error);
}

TEST(NwCorner, DyadicMarginalsAreExact) {
  const std::vector<double> a{0.125, 0.5, 0.375}, b{0.25, 0.25, 0.25, 0.0625, 0.1875};
  const auto c = nw_corner(a, b);
  EXPECT_TRUE(has_marginals(c, a, b, 0.0));
  EXPECT_GE(c.plan.minCoeff(), 0.0);
}

TEST(Gw1dInner, MatchesBruteForce) {
  std::mt19937_64 rng(41);
  for (int n = 1; n <= 6; ++n) {
    for (int rep = 0; rep < 10; ++rep) {
      const auto x = sorted_normal(n, rng, rep % 2 ? 1.0 : 0.0);
      const auto y = sorted_normal(n, rng, rep % 3 ? -0.5 : 0.0);
      const auto w = uniform_weights(n);
      const auto res = gw1d_inner(x, w, y, w);
      EXPECT_NEAR(res.value, brute_force_gw1d(x, y), 1e-12) << n;
      EXPECT_TRUE(has_marginals(res.coupling, w, w, 1e-12));
    }
  }
}

TEST(Gw1dInner, SingleAtomAndSymmetricTie) {
  const std::vector<double> one{1.0}, x{1.5}, y{-2.0};
  EXPECT_NEAR(gw1d_inner(x, one, y, one).value, std::pow(1.5 * 1.5 - 4.0, 2), 1e-14);
  const std::vector<double> s{-1.0, 0.0, 1.0};
  const auto w = uniform_weights(3);
  const auto res = gw1d_inner(s, w, s, w);
  EXPECT_NEAR(res.value, brute_force_gw1d(s, s), 1e-15);
  EXPECT_EQ(res.coupling.plan, nw_corner(w, w).plan);  // ascending wins the tie
  const std::vector<double> unsorted{1.0, 0.0, 2.0};
  EXPECT_THROW(gw1d_inner(unsorted, w, s, w), Error);
}

TEST(Gw1dInner, ReflectionInvariant) {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = sorted_normal(5, rng, 0.7);
    const auto y = sorted_normal(7, rng);
    const auto a = oracle::random_simplex(5, rng), b = oracle::random_simplex(7, rng);
    std::vector<double> xr(x.rbegin(), x.rend()), ar(a.rbegin(), a.rend());
    for (auto& v : xr) v = -v;
    EXPECT_NEAR(gw1d_inner(x, a, y, b).value, gw1d_inner(xr, ar, y, b).value, 1e-12);
  }
}

TEST(HwTensor, MatchesNaiveLoop) {
  std::mt19937_64 rng(47);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix X = oracle::random_matrix(3, 2, rng), Y = oracle::random_matrix(4, 2, rng);
    const auto a = oracle::random_simplex(3, rng), b = oracle::random_simplex(4, rng);
    const Matrix g = nw_corner(a, b).plan;
    Vector w(2);
    w << 1.0, 0.3;
    EXPECT_LT((hw_tensor(X, Y, g) - naive_tensor(X, Y, g, Vector::Ones(2))).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((hw_tensor(X, Y, g, w) - naive_tensor(X, Y, g, w)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(HwTensor, ScalarAndZeroWeights) {
  Matrix x(1, 3), y(1, 3);
  x << 1.0, -2.0, 0.5;
  y << 0.3, 1.0, 2.0;
  const Matrix g = Matrix::Ones(1, 1);
  EXPECT_NEAR(hw_objective(x, y, g), (x.array().square() - y.array().square()).matrix().squaredNorm(), 1e-14);
  std::mt19937_64 rng(53);
  const Matrix X = oracle::random_matrix(3, 3, rng), Y = oracle::random_matrix(3, 3, rng);
  EXPECT_EQ(hw_tensor(X, Y, Matrix::Constant(3, 3, 1.0 / 9), Vector::Zero(3)), Matrix::Zero(3, 3));
  EXPECT_THROW(hw_tensor(X, Y, Matrix::Constant(2, 3, 1.0 / 6)), Error);
}

TEST(HwSolve, IdenticalCloudsStayAtZero) {
  std::mt19937_64 rng(59);
  const Matrix X = oracle::random_matrix(5, 3, rng);
  const auto w = uniform_weights(5);
  HwParams prm;
  prm.init = Matrix(Matrix::Identity(5, 5) / 5.0);
  const auto res = hw_solve(X, X, w, w, prm);
  EXPECT_NEAR(res.value, 0.0, 1e-14);
  EXPECT_EQ(res.coupling.plan, *prm.init);
}

TEST(HwSolve, MonotoneTraceAndFeasible) {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix X = oracle::random_matrix(6, 2, rng), Y = oracle::random_matrix(5, 2, rng, 1.5);
    const auto a = oracle::random_simplex(6, rng), b = oracle::random_simplex(5, rng);
    const auto res = hw_solve(X, Y, a, b);
    for (std::size_t k = 1; k < res.trace.size(); ++k) EXPECT_LE(res.trace[k], res.trace[k - 1] + 1e-12);
    EXPECT_TRUE(has_marginals(res.coupling, a, b, 1e-9));
    EXPECT_NEAR(res.value, hw_objective(X, Y, res.coupling.plan), 1e-9);
  }
}

TEST(HwSolve, OneDimensionMatchesClosedForm) {
  std::mt19937_64 rng(67);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = sorted_normal(7, rng, 0.3), y = sorted_normal(6, rng, -0.2);
    const auto a = oracle::random_simplex(7, rng), b = oracle::random_simplex(6, rng);
    Matrix X(7, 1), Y(6, 1);
    // Shuffle the atom order; the solver must not rely on sorted input.
    std::vector<int> px(7), py(6);
    std::iota(px.begin(), px.end(), 0);
    std::iota(py.begin(), py.end(), 0);
    std::shuffle(px.begin(), px.end(), rng);
    std::shuffle(py.begin(), py.end(), rng);
    std::vector<double> as(7), bs(6);
    for (int i = 0; i < 7; ++i) {
      X(px[i], 0) = x[i];
      as[px[i]] = a[i];
    }
    for (int j = 0; j < 6; ++j) {
      Y(py[j], 0) = y[j];
      bs[py[j]] = b[j];
    }
    const double best = gw1d_inner(x, a, y, b).value;
    EXPECT_NEAR(hw_solve(X, Y, as, bs).value, best, 1e-8);
    // From the product plan the iteration ends at a stationary plan that
    // never beats the closed form.
    HwParams cold;
    cold.init = Eigen::Map<Vector>(as.data(), 7) * Eigen::Map<Vector>(bs.data(), 6).transpose();
    EXPECT_GE(hw_solve(X, Y, as, bs, cold).value, best - 1e-10);
  }
}

TEST(HwSolve, AxisFlipsGiveZero) {
  std::mt19937_64 rng(71);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 6;
    const Matrix X = oracle::random_matrix(n, 3, rng);
    Vector flips(3);
    flips << 1.0, -1.0, (rep % 2 ? -1.0 : 1.0);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix Y(n, 3);
    for (int i = 0; i < n; ++i) Y.row(perm[i]) = X.row(i).cwiseProduct(flips.transpose());
    const auto w = uniform_weights(n);
    const auto res = hw_solve(X, Y, w, w);
    EXPECT_LE(res.value, 1e-10) << rep;
  }
  // Clouds that differ by more than flips keep a positive value.
  const Matrix X = oracle::random_matrix(4, 2, rng);
  const Matrix Y = 1.5 * X;
  const auto w = uniform_weights(4);
  EXPECT_GT(hw_solve(X, Y, w, w).value, 1e-3);
}

TEST(HwSolve, LargeInstancesRejected) {
  std::mt19937_64 rng(73);
  const Matrix X = oracle::random_matrix(9, 2, rng);
  const auto w = uniform_weights(9);
  try {
    hw_solve(X, X, w, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInstanceTooLarge);
  }
  const Matrix Z = oracle::random_matrix(50, 1, rng);
  EXPECT_NO_THROW(hw_solve(Z, Z, uniform_weights(50), uniform_weights(50)));
}

TEST(MongeKnothe, PushesSigmaOntoLambda) {
  std::mt19937_64 rng(79);
  for (int rep = 0; rep < 50; ++rep) {
    GaussianSubspaces g{oracle::random_spd(4, rng), oracle::random_spd(3, rng), random_orthonormal(4, 2, rng),
                        random_orthonormal(3, 2, rng)};
    const auto mk = mk_gaussian(g);
    EXPECT_LE((mk.B * g.Sigma * mk.B.transpose() - g.Lambda).norm(), 1e-8) << rep;
  }
}

TEST(MongeKnothe, FullSubspaceIsPlainGwMap) {
  std::mt19937_64 rng(83);
  const Matrix s = oracle::random_spd(3, rng), l = oracle::random_spd(3, rng);
  const auto mk = mk_gaussian({s, l, Matrix::Identity(3, 3), Matrix::Identity(3, 3)});
  EXPECT_LE((mk.B - mk.T_EF).norm(), 1e-12);
  EXPECT_LE((mk.B * s * mk.B.transpose() - l).norm(), 1e-10);
}

TEST(MongeKnothe, DiagonalCase) {
  Vector sd(4), ld(3);
  sd << 9.0, 4.0, 2.0, 1.0;
  ld << 3.0, 2.0, 0.5;
  Matrix e = Matrix::Zero(4, 2), f = Matrix::Zero(3, 2);
  e(0, 0) = e(1, 1) = 1.0;
  f(0, 0) = f(1, 1) = 1.0;
  const auto mk = mk_gaussian({sd.asDiagonal(), ld.asDiagonal(), e, f});
  Matrix expected = Matrix::Zero(3, 4);
  expected(0, 0) = std::sqrt(3.0 / 9.0);
  expected(1, 1) = std::sqrt(2.0 / 4.0);
  expected(2, 2) = std::sqrt(0.5 / 2.0);
  EXPECT_LE((mk.B - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MongeKnothe, Validation) {
  std::mt19937_64 rng(89);
  const Matrix s = oracle::random_spd(3, rng), l = oracle::random_spd(4, rng);
  EXPECT_THROW(mk_gaussian({s, l, random_orthonormal(3, 2, rng), random_orthonormal(4, 2, rng)}), Error);
  Matrix notortho = Matrix::Ones(4, 2);
  try {
    mk_gaussian({l, s, notortho, random_orthonormal(3, 2, rng)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidSubspace);
  }
}

TEST(MongeIndependent, MarginalsAndPsd) {
  std::mt19937_64 rng(97);
  for (int rep = 0; rep < 50; ++rep) {
    const int k = 1 + rep % 2;
    GaussianSubspaces g{oracle::random_spd(4, rng), oracle::random_spd(3, rng), random_orthonormal(4, k + 1, rng),
                        random_orthonormal(3, k, rng)};
    const Matrix gamma = mi_gaussian(g);
    EXPECT_EQ(gamma.topLeftCorner(4, 4), g.Sigma);
    EXPECT_EQ(gamma.bottomRightCorner(3, 3), g.Lambda);
    EXPECT_GE(sym_eig(0.5 * (gamma + gamma.transpose())).values.minCoeff(), -1e-8) << rep;
  }
}

TEST(MongeIndependent, FullSubspaceIsDeterministic) {
  std::mt19937_64 rng(101);
  const Matrix s = oracle::random_spd(3, rng), l = oracle::random_spd(3, rng);
  const Matrix id = Matrix::Identity(3, 3);
  const Matrix gamma = mi_gaussian({s, l, id, id});
  const auto mk = mk_gaussian({s, l, id, id});
  EXPECT_LE((gamma.topRightCorner(3, 3) - s * mk.T_EF.transpose()).norm(), 1e-10);
}
