#include "deckchase/usv_estimator.hpp"

#include "deckchase/angles.hpp"
#include "deckchase/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <string>

namespace deckchase::usv {
namespace {

constexpr double kPsdTolerance = 1e-9;

Eigen::Matrix<double, kMeasDim, kStateDim> measurement_matrix() {
  Eigen::Matrix<double, kMeasDim, kStateDim> h = Eigen::Matrix<double, kMeasDim, kStateDim>::Zero();
  h(0, kX) = 1.0;
  h(1, kY) = 1.0;
  h(2, kZ) = 1.0;
  h(3, kEta) = 1.0;
  return h;
}

double min_eigenvalue(const Mat8& m) {
  Eigen::SelfAdjointEigenSolver<Mat8> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace

Vec8 UsvState::to_vector() const {
  Vec8 v;
  v << x, y, z, eta, xdot, ydot, zdot, etadot;
  return v;
}

UsvState UsvState::from_vector(const Vec8& v) {
  return UsvState{v[kX], v[kY], v[kZ], v[kEta], v[kXDot], v[kYDot], v[kZDot], v[kEtaDot]};
}

double UsvState::horizontal_speed() const { return std::hypot(xdot, ydot); }

bool UsvState::finite() const { return to_vector().allFinite(); }

void DragParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw InvalidConfig(fmt::format("drag mass must be positive, got {}", mass));
  }
  if (!(k_x >= 0.0) || !(k_y >= 0.0)) {
    throw InvalidConfig(fmt::format("drag coefficients must be non-negative, got k_x={} k_y={}", k_x, k_y));
  }
}

ProcessNoise ProcessNoise::curvilinear(double correlation) {
  ProcessNoise noise;
  noise.sigma_cross = correlation * std::sqrt(noise.sigma_xdot * noise.sigma_etadot);
  return noise;
}

ProcessNoise ProcessNoise::straight_line() { return ProcessNoise{}; }

Mat8 ProcessNoise::matrix() const {
  Mat8 q = Mat8::Zero();
  q(kX, kX) = sigma_x;
  q(kY, kY) = sigma_y;
  q(kZ, kZ) = sigma_z;
  q(kEta, kEta) = sigma_eta;
  q(kXDot, kXDot) = sigma_xdot;
  q(kYDot, kYDot) = sigma_ydot;
  q(kZDot, kZDot) = sigma_zdot;
  q(kEtaDot, kEtaDot) = sigma_etadot;
  q(kXDot, kEtaDot) = q(kEtaDot, kXDot) = sigma_cross;
  q(kYDot, kEtaDot) = q(kEtaDot, kYDot) = sigma_cross;
  return q;
}

void ProcessNoise::validate() const {
  const Mat8 q = matrix();
  if (!q.allFinite()) {
    throw InvalidConfig("process noise contains non-finite entries");
  }
  const double lambda = min_eigenvalue(q);
  if (lambda < -kPsdTolerance) {
    throw InvalidConfig(fmt::format(
        "process noise is not positive semidefinite (min eigenvalue {:.3e}); |sigma_cross| too large",
        lambda));
  }
}

RotationPair body_world_rotation(double eta) {
  const double c = std::cos(eta);
  const double s = std::sin(eta);
  RotationPair r;
  r.body_from_world << c, s, -s, c;
  r.world_from_body = r.body_from_world.transpose();
  return r;
}

Eigen::Vector2d drag_input(const UsvState& state, const DragParams& drag) {
  const RotationPair r = body_world_rotation(state.eta);
  Eigen::Matrix2d body_drag = Eigen::Matrix2d::Zero();
  body_drag(0, 0) = -drag.k_x;
  body_drag(1, 1) = -drag.k_y;
  const Eigen::Vector2d velocity(state.xdot, state.ydot);
  return r.world_from_body * body_drag * r.body_from_world * velocity / drag.mass;
}

Mat8 transition_matrix(double dt) {
  Mat8 a = Mat8::Identity();
  for (int i = 0; i < 4; ++i) {
    a(i, i + 4) = dt;
  }
  return a;
}

Eigen::Matrix<double, kStateDim, 2> input_matrix(double dt) {
  Eigen::Matrix<double, kStateDim, 2> b = Eigen::Matrix<double, kStateDim, 2>::Zero();
  b(kXDot, 0) = dt;
  b(kYDot, 1) = dt;
  return b;
}

UsvState propagate_mean(const UsvState& state, const DragParams& drag, double dt) {
  const Eigen::Vector2d u = drag_input(state, drag);
  Vec8 next = transition_matrix(dt) * state.to_vector() + input_matrix(dt) * u;
  next[kEta] = wrap_angle(next[kEta]);
  return UsvState::from_vector(next);
}

std::string_view to_string(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::kCurvilinear:
      return "curvitrack";
    case EstimatorMode::kStraightLine:
      return "baseline";
  }
  return "unknown";
}

EstimatorMode parse_estimator_mode(std::string_view name) {
  if (name == "curvitrack" || name == "curvilinear") {
    return EstimatorMode::kCurvilinear;
  }
  if (name == "baseline" || name == "linear") {
    return EstimatorMode::kStraightLine;
  }
  throw InvalidArgument(fmt::format("unknown estimator mode '{}' (expected curvitrack or baseline)", name));
}

FilterConfig FilterConfig::for_mode(EstimatorMode mode) {
  FilterConfig config;
  if (mode == EstimatorMode::kStraightLine) {
    config.drag.k_y = 0.0;
    config.noise = ProcessNoise::straight_line();
  }
  return config;
}

void FilterConfig::validate() const {
  drag.validate();
  noise.validate();
  if (!(dt > 0.0)) {
    throw InvalidConfig(fmt::format("filter sampling period must be positive, got {}", dt));
  }
  if (!(meas_var.array() > 0.0).all()) {
    throw InvalidConfig("measurement variances must be positive");
  }
  if (!(init_pose_var > 0.0) || !(init_vel_var > 0.0)) {
    throw InvalidConfig("initial variances must be positive");
  }
}

UsvFilter::UsvFilter(FilterConfig config) : config_(std::move(config)) {
  config_.validate();
  q_nominal_ = config_.noise.matrix();
}

void UsvFilter::initialize(const PoseMeasurement& z) {
  state_ = UsvState{z.x, z.y, z.z, wrap_angle(z.eta), 0.0, 0.0, 0.0, 0.0};
  covariance_ = Mat8::Zero();
  for (int i = 0; i < 4; ++i) {
    covariance_(i, i) = config_.init_pose_var;
    covariance_(i + 4, i + 4) = config_.init_vel_var;
  }
  time_ = z.t;
  last_measurement_t_ = z.t;
  initialized_ = true;
  check_covariance();
}

void UsvFilter::reset_state(const UsvState& state, const Mat8& covariance, double t) {
  state_ = state;
  state_.eta = wrap_angle(state_.eta);
  covariance_ = covariance;
  time_ = t;
  initialized_ = true;
  check_covariance();
}

void UsvFilter::predict() { predict(config_.dt); }

void UsvFilter::predict(double dt) {
  if (!(dt >= 0.0)) {
    throw InvalidArgument(fmt::format("predict step must be non-negative, got {}", dt));
  }
  if (dt == 0.0) {
    return;
  }
  const Mat8 a = transition_matrix(dt);
  state_ = propagate_mean(state_, config_.drag, dt);
  covariance_ = a * covariance_ * a.transpose() + q_nominal_ * (dt / config_.dt);
  time_ += dt;
  check_covariance();
}

bool UsvFilter::update(const PoseMeasurement& z) {
  if (z.t < last_measurement_t_) {
    return false;
  }
  const Vec4 measured(z.x, z.y, z.z, z.eta);
  if (!measured.allFinite() || !std::isfinite(z.t)) {
    throw InvalidArgument("pose measurement must be finite");
  }
  const auto h = measurement_matrix();
  Vec4 innovation = measured - h * state_.to_vector();
  innovation[3] = wrap_angle(innovation[3]);

  const Eigen::Matrix4d s = h * covariance_ * h.transpose() + Eigen::Matrix4d(config_.meas_var.asDiagonal());
  Eigen::LLT<Eigen::Matrix4d> llt(s);
  if (llt.info() != Eigen::Success) {
    throw SingularInnovation(fmt::format("innovation covariance not invertible at t={}", z.t));
  }
  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  const Eigen::Matrix<double, kStateDim, kMeasDim> gain = llt.solve(h * covariance_).transpose();

  Vec8 x = state_.to_vector() + gain * innovation;
  x[kEta] = wrap_angle(x[kEta]);
  state_ = UsvState::from_vector(x);

  const Mat8 i_kh = Mat8::Identity() - gain * h;
  covariance_ = i_kh * covariance_ * i_kh.transpose() +
                gain * config_.meas_var.asDiagonal() * gain.transpose();
  last_measurement_t_ = z.t;
  check_covariance();
  return true;
}

bool UsvFilter::process(const PoseMeasurement& z) {
  if (!initialized_) {
    initialize(z);
    return true;
  }
  if (z.t < last_measurement_t_) {
    return false;
  }
  if (z.t > time_) {
    predict(z.t - time_);
  }
  return update(z);
}

void UsvFilter::check_covariance() {
  covariance_ = 0.5 * (covariance_ + covariance_.transpose());
  if (!covariance_.allFinite()) {
    throw CovarianceDegenerate(fmt::format("covariance became non-finite at t={}", time_));
  }
  const double lambda = min_eigenvalue(covariance_);
  min_eigenvalue_seen_ = std::min(min_eigenvalue_seen_, lambda);
  if (lambda < -kPsdTolerance) {
    throw CovarianceDegenerate(
        fmt::format("covariance lost positive semidefiniteness at t={} (min eigenvalue {:.3e})", time_, lambda));
  }
}

PredictionHorizon predict_horizon(const UsvFilter& filter, int steps, double dt_pred) {
  return predict_horizon(filter, steps, dt_pred, filter.time());
}

PredictionHorizon predict_horizon(const UsvFilter& filter, int steps, double dt_pred, double t_anchor) {
  if (steps < 1) {
    throw InvalidArgument(fmt::format("horizon length must be at least 1, got {}", steps));
  }
  if (!(dt_pred > 0.0)) {
    throw InvalidArgument(fmt::format("prediction step must be positive, got {}", dt_pred));
  }
  double lead = t_anchor - filter.time();
  if (lead < -1e-9) {
    throw InvalidArgument(fmt::format("anchor time {} precedes filter time {}", t_anchor, filter.time()));
  }
  const DragParams& drag = filter.config().drag;
  UsvState s = filter.state();
  // Bring the mean up to the anchor, then produce the horizon on the grid.
  while (lead > 1e-12) {
    const double h = std::min(lead, dt_pred);
    s = propagate_mean(s, drag, h);
    lead -= h;
  }

  PredictionHorizon horizon;
  horizon.dt_pred = dt_pred;
  horizon.t0 = t_anchor;
  horizon.states.reserve(static_cast<std::size_t>(steps));
  for (int n = 0; n < steps; ++n) {
    s = propagate_mean(s, drag, dt_pred);
    horizon.states.push_back(s);
  }
  return horizon;
}

}  // namespace deckchase::usv
