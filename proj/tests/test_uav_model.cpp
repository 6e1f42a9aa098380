#include "deckchase/errors.hpp"
#include "deckchase/uav_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace deckchase;
using namespace deckchase::uav;

TEST(UavModel, AxisStencilsAtCentisecond) {
  const auto m = build_model(0.01);
  EXPECT_NEAR(m.axis_transition()(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(m.axis_transition()(0, 1), 0.01, 1e-15);
  EXPECT_NEAR(m.axis_transition()(0, 2), 5e-5, 1e-15);
  EXPECT_NEAR(m.axis_transition()(1, 2), 0.01, 1e-15);
  EXPECT_EQ(m.axis_transition()(1, 0), 0.0);
  EXPECT_EQ(m.axis_transition()(2, 2), 1.0);
  EXPECT_NEAR(m.axis_input()[0], 1.0e-6 / 6.0, 1e-18);
  EXPECT_NEAR(m.axis_input()[1], 5e-5, 1e-18);
  EXPECT_NEAR(m.axis_input()[2], 0.01, 1e-18);
}

TEST(UavModel, KroneckerStructure) {
  const auto m = build_model(0.05);
  for (int a = 0; a < kAxes; ++a) {
    for (int b = 0; b < kAxes; ++b) {
      const Eigen::Matrix3d blk = m.transition().block<3, 3>(3 * a, 3 * b);
      if (a == b) {
        EXPECT_EQ(blk, m.axis_transition());
      } else {
        EXPECT_TRUE(blk.isZero(0.0));
      }
      const Eigen::Vector3d col = m.input().block<3, 1>(3 * a, b);
      if (a == b) {
        EXPECT_EQ(col, m.axis_input());
      } else {
        EXPECT_TRUE(col.isZero(0.0));
      }
    }
  }
  const Eigen::MatrixXd k = kronecker_identity(2, Eigen::Matrix2d::Constant(3.0));
  EXPECT_EQ(k.rows(), 4);
  EXPECT_EQ(k(0, 1), 3.0);
  EXPECT_EQ(k(0, 2), 0.0);
  EXPECT_EQ(k(3, 2), 3.0);
}

TEST(UavModel, ConstantJerkMatchesClosedForm) {
  const double dt = 0.02;
  const auto m = build_model(dt);
  UavState x;
  const double j = 1.7;
  UavInput u = UavInput::Zero();
  u[kAxisY] = j;
  for (int k = 1; k <= 50; ++k) {
    x = step(m, x, u);
    const double t = k * dt;
    EXPECT_NEAR(x.position(kAxisY), j * t * t * t / 6.0, 1e-12);
    EXPECT_NEAR(x.velocity(kAxisY), j * t * t / 2.0, 1e-12);
    EXPECT_NEAR(x.acceleration(kAxisY), j * t, 1e-12);
    EXPECT_EQ(x.position(kAxisX), 0.0);
  }
}

TEST(UavModel, RolloutComposesStepsAndHoldsLastInput) {
  const auto m = build_model(0.01);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  UavState x0;
  for (int i = 0; i < kStateDim; ++i) x0.values[i] = n(rng);
  std::vector<UavInput> u(4);
  for (auto& ui : u) ui = UavInput(n(rng), n(rng), n(rng), n(rng));
  const auto states = rollout(m, x0, u, 9);
  ASSERT_EQ(states.size(), 9u);
  UavState x = x0;
  for (int k = 0; k < 9; ++k) {
    x = step(m, x, u[static_cast<std::size_t>(std::min(k, 3))]);
    EXPECT_LT((states[static_cast<std::size_t>(k)].values - x.values).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(rollout(m, x0, {}, 3), LengthMismatch);
  EXPECT_THROW(rollout(m, x0, u, 3), LengthMismatch);
}

TEST(UavModel, Superposition) {
  const auto m = build_model(0.03);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  UavState x0;
  for (int i = 0; i < kStateDim; ++i) x0.values[i] = n(rng);
  std::vector<UavInput> u1(5), u2(5), sum(5);
  for (int i = 0; i < 5; ++i) {
    u1[static_cast<std::size_t>(i)] = UavInput(n(rng), n(rng), n(rng), n(rng));
    u2[static_cast<std::size_t>(i)] = UavInput(n(rng), n(rng), n(rng), n(rng));
    sum[static_cast<std::size_t>(i)] = u1[static_cast<std::size_t>(i)] + u2[static_cast<std::size_t>(i)];
  }
  const UavState zero;
  const auto a = rollout(m, x0, u1, 20);
  const auto b = rollout(m, zero, u2, 20);
  const auto c = rollout(m, x0, sum, 20);
  for (std::size_t k = 0; k < c.size(); ++k) {
    EXPECT_LT((c[k].values - a[k].values - b[k].values).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(UavModel, RejectsNonPositiveStep) {
  EXPECT_THROW(build_model(0.0), InvalidArgument);
  EXPECT_THROW(build_model(-0.01), InvalidArgument);
}
