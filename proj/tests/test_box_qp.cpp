#include "deckchase/box_qp.hpp"
#include "deckchase/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace deckchase;
using namespace deckchase::mpc;

namespace {

double objective(const Eigen::MatrixXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(p * x) + q.dot(x);
}

// Enumerates every lower / upper / free assignment and keeps the best
// feasible stationary point of the free block.
Eigen::VectorXd brute_force(const Eigen::MatrixXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi) {
  const int n = static_cast<int>(q.size());
  int combos = 1;
  for (int i = 0; i < n; ++i) combos *= 3;
  Eigen::VectorXd best;
  double best_f = std::numeric_limits<double>::infinity();
  for (int c = 0; c < combos; ++c) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<int> free;
    int code = c;
    for (int i = 0; i < n; ++i) {
      const int s = code % 3;
      code /= 3;
      if (s == 0) x[i] = lo[i];
      if (s == 1) x[i] = hi[i];
      if (s == 2) free.push_back(i);
    }
    if (!free.empty()) {
      const int k = static_cast<int>(free.size());
      Eigen::MatrixXd pf(k, k);
      Eigen::VectorXd rhs(k);
      for (int a = 0; a < k; ++a) {
        rhs[a] = -q[free[a]];
        for (int j = 0; j < n; ++j) {
          if (std::find(free.begin(), free.end(), j) == free.end()) rhs[a] -= p(free[a], j) * x[j];
        }
        for (int b = 0; b < k; ++b) pf(a, b) = p(free[a], free[b]);
      }
      const Eigen::VectorXd xf = pf.ldlt().solve(rhs);
      bool ok = true;
      for (int a = 0; a < k; ++a) {
        x[free[a]] = xf[a];
        ok = ok && xf[a] >= lo[free[a]] - 1e-12 && xf[a] <= hi[free[a]] + 1e-12;
      }
      if (!ok) continue;
    }
    const double f = objective(p, q, x);
    if (f < best_f) {
      best_f = f;
      best = x;
    }
  }
  return best;
}

}  // namespace

TEST(BoxQp, MatchesBruteForceEnumeration) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int dim = 1 + trial % 6;
    Eigen::MatrixXd l(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) l(i, j) = n(rng);
    const Eigen::MatrixXd p = l * l.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd q(dim), lo(dim), hi(dim);
    for (int i = 0; i < dim; ++i) {
      q[i] = 3.0 * n(rng);
      lo[i] = -0.5 - std::abs(n(rng));
      hi[i] = 0.5 + std::abs(n(rng));
    }
    BoxQpSettings settings;
    settings.tolerance = 1e-9;
    const BoxQp qp(p, lo, hi, settings);
    const auto r = qp.solve(q, Eigen::VectorXd::Zero(dim));
    const Eigen::VectorXd oracle = brute_force(p, q, lo, hi);
    EXPECT_TRUE(r.converged);
    EXPECT_LT((r.x - oracle).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
    EXPECT_TRUE((r.x.array() >= lo.array()).all() && (r.x.array() <= hi.array()).all());
  }
}

TEST(BoxQp, UnconstrainedInteriorSolution) {
  Eigen::MatrixXd p(2, 2);
  p << 2.0, 0.5, 0.5, 1.0;
  const Eigen::VectorXd q = Eigen::Vector2d(-1.0, 0.3);
  const BoxQp qp(p, Eigen::VectorXd::Constant(2, -10.0), Eigen::VectorXd::Constant(2, 10.0));
  const auto r = qp.solve(q, Eigen::VectorXd::Zero(2));
  const Eigen::VectorXd exact = p.ldlt().solve(-q);
  EXPECT_LT((r.x - exact).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(r.kkt_residual, 1e-9);
}

TEST(BoxQp, KktResidualDefinition) {
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::VectorXd q = Eigen::Vector2d(-5.0, 0.0);
  const Eigen::VectorXd lo = Eigen::Vector2d(-1.0, -1.0);
  const Eigen::VectorXd hi = Eigen::Vector2d(1.0, 1.0);
  EXPECT_NEAR(box_kkt_residual(p, q, lo, hi, Eigen::Vector2d(1.0, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(box_kkt_residual(p, q, lo, hi, Eigen::Vector2d(0.0, 0.0)), 1.0, 1e-15);
}

TEST(BoxQp, RejectsBadProblems) {
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(BoxQp(p, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)), LengthMismatch);
  EXPECT_THROW(BoxQp(p, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2)), InvalidConfig);
  EXPECT_THROW(BoxQp(-p, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)), InvalidConfig);
  const BoxQp qp(p, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2));
  EXPECT_THROW(qp.solve(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2)), LengthMismatch);
}
