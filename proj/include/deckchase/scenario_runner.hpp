#pragma once

// Fixed-step closed-loop simulation: world 100 Hz, pose sensor 30 Hz,
// mission supervisor every tick, MPC 20 Hz. All scheduling is on integer
// ticks and all randomness comes from seeded Mersenne twisters, so equal
// seeds and scripts give identical logs.

#include "deckchase/mission.hpp"
#include "deckchase/mpc.hpp"
#include "deckchase/scenario_script.hpp"
#include "deckchase/sim_world.hpp"
#include "deckchase/usv_estimator.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace deckchase::sim {

struct Cadence {
  int world_hz = 100;
  int sensor_hz = 30;
  int mpc_hz = 20;

  double dt() const { return 1.0 / world_hz; }
  int mpc_period_ticks() const { return world_hz / mpc_hz; }
  bool is_sensor_tick(std::int64_t tick) const;
  void validate() const;
};

struct StackConfig {
  usv::EstimatorMode mode = usv::EstimatorMode::kCurvilinear;
  std::optional<usv::FilterConfig> filter;  // defaults derived from `mode`
  mpc::MpcConfig mpc;
  UsvPlantParams usv_plant;
  UavPlantParams uav_plant;
  SensorParams sensor;
  mission::MissionConfig mission;
  Cadence cadence;

  double follow_height = 3.0;
  double descent_rate = 0.5;
  double land_floor_offset = -0.1;
  double warmup = 10.0;
  std::vector<double> metric_horizons = {1.0, 2.0};

  // Landing protocol. Trigger times are uniform over
  // [warmup, warmup + trigger_window]; 0 uses the script's lap period.
  bool landing = false;
  double trigger_window = 0.0;
  int max_attempts = 1;
  double retrigger_delay = 5.0;
  bool stop_after_attempts = true;

  bool record_rows = true;

  usv::FilterConfig filter_config() const;
  void validate() const;
};

struct LogRow {
  std::int64_t tick = 0;
  double t = 0.0;
  usv::UsvState usv;
  double uav_x = 0.0, uav_y = 0.0, uav_z = 0.0, uav_psi = 0.0;
  double uav_vx = 0.0, uav_vy = 0.0, uav_vz = 0.0;
  bool estimate_valid = false;
  usv::UsvState estimate;
  bool visible = false;
  bool measured = false;
  mission::Phase phase = mission::Phase::kFollow;
  mpc::ControlCommand command;
  SteeringCommand steering;
};

struct PredictionSample {
  std::int64_t anchor_tick = 0;
  std::int64_t target_tick = 0;
  double horizon_s = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// Run diagnostics; wall-clock timings are kept out of the written logs.
struct RunDiagnostics {
  std::vector<double> solve_ms;
  int solves = 0;
  int unconverged_solves = 0;
  int bound_violations = 0;
  double max_kkt_residual = 0.0;
  double min_covariance_eigenvalue = 1e300;
  int filter_steps = 0;
};

struct ScenarioLog {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
  double dt = 0.01;
  double warmup = 0.0;
  std::vector<LogRow> rows;
  std::vector<PredictionSample> predictions;
  std::vector<mission::AttemptRecord> attempts;
  std::vector<mission::PhaseEvent> phase_events;
  RunDiagnostics diagnostics;
};

class Simulation {
 public:
  Simulation(ScenarioScript script, StackConfig config, std::uint64_t seed);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Advances the world by one tick.
  void step();
  bool done() const;

  /// Overrides the scripted steering until cleared.
  void set_external_steering(std::optional<SteeringCommand> cmd) { external_steering_ = cmd; }
  /// Requests a landing on the next tick (only honoured in FOLLOW).
  void request_landing() { landing_requested_ = true; }

  const WorldState& world() const { return world_; }
  const usv::UsvFilter& filter() const { return filter_; }
  const mission::MissionSupervisor& mission() const { return mission_; }
  const std::optional<usv::PredictionHorizon>& horizon() const { return horizon_; }
  const mpc::ControlCommand& command() const { return command_; }
  const SteeringCommand& steering() const { return steering_; }
  const ScenarioScript& script() const { return script_; }
  const StackConfig& config() const { return config_; }
  std::optional<std::int64_t> trigger_tick() const { return trigger_tick_; }

  const ScenarioLog& log() const { return log_; }
  /// Closes open attempts and hands over the log.
  ScenarioLog finish();

 private:
  void filter_step(const std::optional<usv::PoseMeasurement>& z);
  void control_step();
  double distance_to_deck() const;

  ScenarioScript script_;
  StackConfig config_;
  std::uint64_t seed_;
  ScriptedSteering scripted_;
  GaussianSource sensor_rng_;
  usv::UsvFilter filter_;
  mpc::MpcController controller_;
  mission::MissionSupervisor mission_;
  WorldState world_;

  std::optional<SteeringCommand> external_steering_;
  SteeringCommand steering_;
  bool landing_requested_ = false;
  std::optional<std::int64_t> trigger_tick_;
  double last_seen_t_ = 0.0;
  bool measured_this_tick_ = false;

  std::optional<usv::PredictionHorizon> horizon_;
  std::optional<mpc::MpcSolution> last_solution_;
  mpc::ControlCommand command_;
  int metric_ticks_ = 0;

  ScenarioLog log_;
};

ScenarioLog run_scenario(const ScenarioScript& script, const StackConfig& config, std::uint64_t seed);

void write_log_csv(std::ostream& out, const ScenarioLog& log);
void write_events_jsonl(std::ostream& out, const ScenarioLog& log);

}  // namespace deckchase::sim
