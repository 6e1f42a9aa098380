#include "deckchase/sim_world.hpp"

#include "deckchase/angles.hpp"

#include <algorithm>
#include <cmath>

namespace deckchase::sim {
namespace {

struct AxisLimits {
  double v_max;
  double a_max;
  double j_max;
};

// One axis of the velocity tracker. The acceleration demand is capped by
// the jerk-limited braking curve so velocity steps settle without large
// overshoot.
void track_axis(double v_cmd, double& v, double& a, double dt, const AxisLimits& lim, double kv, double ka) {
  v_cmd = std::clamp(v_cmd, -lim.v_max, lim.v_max);
  const double dv = v_cmd - v;
  double a_des = std::min({kv * std::abs(dv), std::sqrt(2.0 * lim.j_max * std::abs(dv)), lim.a_max});
  a_des = std::copysign(a_des, dv);
  const double jerk = std::clamp(ka * (a_des - a), -lim.j_max, lim.j_max);
  a = std::clamp(a + jerk * dt, -lim.a_max, lim.a_max);
  v += a * dt;
}

}  // namespace

usv::UsvState usv_plant_step(const usv::UsvState& state, const SteeringCommand& cmd, double dt,
                             const UsvPlantParams& params) {
  const double yaw_rate = std::clamp(cmd.yaw_rate, -params.max_yaw_rate, params.max_yaw_rate);
  const double surge_cmd = std::clamp(cmd.surge_speed, -params.max_surge, params.max_surge);
  const double surge_target = surge_cmd / (1.0 + params.turn_speed_coupling * std::abs(yaw_rate));

  usv::UsvState next = state;
  next.eta = wrap_angle(state.eta + yaw_rate * dt);
  next.etadot = yaw_rate;

  // The hull turns under the water-frame velocity: part of the surge becomes
  // sway, which the lateral drag then dissipates.
  const auto rot = usv::body_world_rotation(next.eta);
  Eigen::Vector2d body = rot.body_from_world * Eigen::Vector2d(state.xdot, state.ydot);
  body[0] = surge_target + (body[0] - surge_target) * std::exp(-params.surge_response_rate * dt);
  body[1] *= std::exp(-params.lateral_drag_rate * dt);
  const Eigen::Vector2d world = rot.world_from_body * body;

  next.xdot = world[0];
  next.ydot = world[1];
  next.zdot = 0.0;
  next.x = state.x + next.xdot * dt;
  next.y = state.y + next.ydot * dt;
  next.z = state.z;
  return next;
}

uav::UavState uav_plant_step(const uav::UavState& state, const mpc::ControlCommand& cmd, double dt,
                             const UavPlantParams& params) {
  uav::UavState next = state;
  const AxisLimits trans{params.v_max, params.a_max, params.j_max};
  for (int i = 0; i < 3; ++i) {
    const auto axis = static_cast<uav::Axis>(i);
    track_axis(cmd.velocity[i], next.velocity(axis), next.acceleration(axis), dt, trans, params.velocity_gain,
               params.acceleration_gain);
  }
  Eigen::Vector3d v(next.velocity(uav::kAxisX), next.velocity(uav::kAxisY), next.velocity(uav::kAxisZ));
  const double speed = v.norm();
  if (speed > params.v_max) {
    v *= params.v_max / speed;
    for (int i = 0; i < 3; ++i) next.velocity(static_cast<uav::Axis>(i)) = v[i];
  }
  for (int i = 0; i < 3; ++i) {
    const auto axis = static_cast<uav::Axis>(i);
    next.position(axis) += next.velocity(axis) * dt;
  }
  if (next.position(uav::kAxisZ) < params.floor_z) {
    next.position(uav::kAxisZ) = params.floor_z;
    next.velocity(uav::kAxisZ) = std::max(0.0, next.velocity(uav::kAxisZ));
    next.acceleration(uav::kAxisZ) = std::max(0.0, next.acceleration(uav::kAxisZ));
  }

  const AxisLimits heading{params.heading_rate_max, params.heading_acc_max, params.heading_jerk_max};
  track_axis(cmd.heading_rate, next.velocity(uav::kAxisPsi), next.acceleration(uav::kAxisPsi), dt, heading,
             params.velocity_gain, params.acceleration_gain);
  next.velocity(uav::kAxisPsi) =
      std::clamp(next.velocity(uav::kAxisPsi), -params.heading_rate_max, params.heading_rate_max);
  next.position(uav::kAxisPsi) += next.velocity(uav::kAxisPsi) * dt;
  return next;
}

bool marker_in_view(const usv::UsvState& usv, const uav::UavState& uav, const CameraParams& camera) {
  const double height = uav.position(uav::kAxisZ) - usv.z;
  if (height <= 0.0) return false;
  const double horizontal = std::hypot(uav.position(uav::kAxisX) - usv.x, uav.position(uav::kAxisY) - usv.y);
  if (horizontal > camera.range) return false;
  const double footprint = height * std::tan(camera.half_angle_deg * kPi / 180.0);
  return horizontal <= footprint + camera.marker_radius;
}

double GaussianSource::next_uniform() {
  // 53 random bits into [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianSource::next() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = next_uniform();
  while (u1 <= 0.0) u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  return r * std::cos(kTwoPi * u2);
}

std::optional<usv::PoseMeasurement> sense_pose(WorldState& world, const SensorParams& params, GaussianSource& rng) {
  Eigen::Vector4d draw;
  for (int i = 0; i < 4; ++i) draw[i] = rng.next();
  world.marker_visible = marker_in_view(world.usv_truth, world.uav_truth, params.camera);
  if (!world.marker_visible) return std::nullopt;

  usv::PoseMeasurement z{world.t, world.usv_truth.x, world.usv_truth.y, world.usv_truth.z, world.usv_truth.eta};
  if (params.noise) {
    z.x += params.stddev[0] * draw[0];
    z.y += params.stddev[1] * draw[1];
    z.z += params.stddev[2] * draw[2];
    z.eta = wrap_angle(z.eta + params.stddev[3] * draw[3]);
  }
  return z;
}

}  // namespace deckchase::sim
