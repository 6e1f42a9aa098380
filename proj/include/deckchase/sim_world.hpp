#pragma once

// Ground-truth plants and the pose sensor of the desk-scale world.

#include "deckchase/mpc.hpp"
#include "deckchase/uav_model.hpp"
#include "deckchase/usv_estimator.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace deckchase::sim {

struct SteeringCommand {
  double surge_speed = 0.0;  // commanded along-hull speed, m/s
  double yaw_rate = 0.0;     // rad/s
  double t = 0.0;
};

// Stand-in vessel constants; the real thrust/steering dynamics are unknown.
struct UsvPlantParams {
  double lateral_drag_rate = 3.0;    // k_y_true / m, 1/s
  double surge_response_rate = 1.0;  // first-order surge relaxation, 1/s
  double turn_speed_coupling = 0.5;  // surge attenuated by 1 / (1 + c |yaw_rate|)
  double max_surge = 5.0;
  double max_yaw_rate = 1.0;
};

struct UavPlantParams {
  double v_max = 8.0;
  double a_max = 6.0;
  double j_max = 20.0;
  double heading_rate_max = 2.0;
  double heading_acc_max = 4.0;
  double heading_jerk_max = 10.0;
  // Velocity loop gain; matched to the command lookahead (1 / 0.1 s).
  double velocity_gain = 10.0;
  double acceleration_gain = 80.0;
  double floor_z = 0.0;  // water / deck level the airframe cannot pass
};

struct CameraParams {
  double half_angle_deg = 42.0;
  double range = 15.0;          // max horizontal distance
  double marker_radius = 0.3;   // tag half-size, counts as visible when any part is in view
};

struct WorldState {
  std::int64_t tick = 0;
  double t = 0.0;
  usv::UsvState usv_truth;
  uav::UavState uav_truth;
  bool marker_visible = false;
  std::uint64_t rng_seed = 0;
};

/// Heading integrates the yaw rate; the hull-frame velocity relaxes toward the
/// (turn-attenuated) surge command while lateral drag removes sideslip.
usv::UsvState usv_plant_step(const usv::UsvState& state, const SteeringCommand& cmd, double dt,
                             const UsvPlantParams& params = {});

/// Jerk- and acceleration-limited velocity tracking per axis.
uav::UavState uav_plant_step(const uav::UavState& state, const mpc::ControlCommand& cmd, double dt,
                             const UavPlantParams& params = {});

/// Geometric visibility of the deck marker from the downward camera.
bool marker_in_view(const usv::UsvState& usv, const uav::UavState& uav, const CameraParams& camera);

/// Standard normal draws from a 64-bit Mersenne twister via Box-Muller, so
/// that logs do not depend on the standard library's distribution code.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}
  double next();
  std::uint64_t next_raw() { return engine_(); }
  double next_uniform();  // [0, 1)

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct SensorParams {
  CameraParams camera;
  // Standard deviations for (x, y, z, eta); matched to the filter's R.
  Eigen::Vector4d stddev = Eigen::Vector4d(0.05, 0.05, 0.05, 0.02);
  bool noise = true;
};

/// Updates world.marker_visible and returns the (noisy) pose when visible.
/// Four normals are drawn on every call so the noise stream does not depend
/// on visibility.
std::optional<usv::PoseMeasurement> sense_pose(WorldState& world, const SensorParams& params, GaussianSource& rng);

}  // namespace deckchase::sim
