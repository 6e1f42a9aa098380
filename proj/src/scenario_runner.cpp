#include "deckchase/scenario_runner.hpp"

#include "deckchase/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace deckchase::sim {
namespace {

constexpr std::uint64_t kTriggerStream = 0x9E3779B97F4A7C15ull;

uav::UavState initial_uav(const ScenarioScript& script, double height) {
  uav::UavState x;
  x.position(uav::kAxisX) = script.initial_x;
  x.position(uav::kAxisY) = script.initial_y;
  x.position(uav::kAxisZ) = height;
  x.position(uav::kAxisPsi) = script.initial_heading;
  x.velocity(uav::kAxisX) = script.initial_speed * std::cos(script.initial_heading);
  x.velocity(uav::kAxisY) = script.initial_speed * std::sin(script.initial_heading);
  return x;
}

usv::UsvState initial_usv(const ScenarioScript& script) {
  usv::UsvState s;
  s.x = script.initial_x;
  s.y = script.initial_y;
  s.eta = script.initial_heading;
  s.xdot = script.initial_speed * std::cos(script.initial_heading);
  s.ydot = script.initial_speed * std::sin(script.initial_heading);
  return s;
}

usv::PredictionHorizon head(const usv::PredictionHorizon& h, std::size_t n) {
  usv::PredictionHorizon out;
  out.dt_pred = h.dt_pred;
  out.t0 = h.t0;
  out.states.assign(h.states.begin(), h.states.begin() + static_cast<std::ptrdiff_t>(std::min(n, h.size())));
  return out;
}

}  // namespace

bool Cadence::is_sensor_tick(std::int64_t tick) const {
  if (tick == 0) return true;
  return (tick * sensor_hz) / world_hz != ((tick - 1) * sensor_hz) / world_hz;
}

void Cadence::validate() const {
  if (world_hz <= 0 || sensor_hz <= 0 || mpc_hz <= 0) throw InvalidConfig("cadence rates must be positive");
  if (sensor_hz > world_hz) throw InvalidConfig("sensor rate cannot exceed the world rate");
  if (world_hz % mpc_hz != 0) throw InvalidConfig("world rate must be a multiple of the controller rate");
}

usv::FilterConfig StackConfig::filter_config() const {
  return filter ? *filter : usv::FilterConfig::for_mode(mode);
}

void StackConfig::validate() const {
  cadence.validate();
  mpc.validate();
  mission.validate();
  filter_config().validate();
  if (!(follow_height > 0.0)) throw InvalidConfig("follow height must be positive");
  if (!(descent_rate > 0.0)) throw InvalidConfig("descent rate must be positive");
  if (warmup < 0.0) throw InvalidConfig("warm-up must be non-negative");
  for (double h : metric_horizons) {
    if (!(h > 0.0)) throw InvalidConfig("metric horizons must be positive");
  }
  if (landing && max_attempts < 1) throw InvalidConfig("landing runs need at least one attempt");
  if (trigger_window < 0.0) throw InvalidConfig("trigger window must be non-negative");
}

Simulation::Simulation(ScenarioScript script, StackConfig config, std::uint64_t seed)
    : script_(std::move(script)),
      config_(std::move(config)),
      seed_(seed),
      scripted_(script_),
      sensor_rng_(seed),
      filter_((config_.validate(), config_.filter_config())),
      controller_(config_.mpc, uav::build_model(config_.cadence.dt())),
      mission_(config_.mission, 0.0) {
  script_.validate();
  scripted_ = ScriptedSteering(script_);
  config_.sensor.noise = config_.sensor.noise && script_.measurement_noise;

  world_.rng_seed = seed;
  world_.usv_truth = initial_usv(script_);
  world_.uav_truth = initial_uav(script_, world_.usv_truth.z + config_.follow_height);

  const double dt = config_.cadence.dt();
  for (double h : config_.metric_horizons) {
    metric_ticks_ = std::max(metric_ticks_, static_cast<int>(std::lround(h / dt)));
  }

  if (config_.landing) {
    double window = config_.trigger_window;
    if (window <= 0.0) window = script_.lap_period > 0.0 ? script_.lap_period : 20.0;
    GaussianSource trigger_rng(seed ^ kTriggerStream);
    const double t_trigger = config_.warmup + window * trigger_rng.next_uniform();
    trigger_tick_ = static_cast<std::int64_t>(std::ceil(t_trigger / dt - 1e-9));
  }

  log_.scenario = script_.name;
  log_.mode = std::string(usv::to_string(config_.mode));
  log_.seed = seed;
  log_.dt = dt;
  log_.warmup = config_.warmup;
  if (config_.record_rows) {
    log_.rows.reserve(static_cast<std::size_t>(script_.duration / dt) + 16);
  }
}

double Simulation::distance_to_deck() const {
  return std::hypot(world_.uav_truth.position(uav::kAxisX) - world_.usv_truth.x,
                    world_.uav_truth.position(uav::kAxisY) - world_.usv_truth.y);
}

bool Simulation::done() const {
  if (config_.landing && config_.stop_after_attempts) {
    const auto& attempts = mission_.attempts();
    const auto closed = std::count_if(attempts.begin(), attempts.end(), [](const auto& a) { return a.t_outcome; });
    if (closed >= config_.max_attempts) return true;
  }
  double end = script_.duration;
  if (config_.landing && trigger_tick_) {
    // Leave room for the attempt to conclude after a late trigger.
    end = std::max(end, static_cast<double>(*trigger_tick_) * log_.dt + config_.mission.land_timeout + 1.0);
  }
  return world_.t >= end - 1e-9;
}

void Simulation::filter_step(const std::optional<usv::PoseMeasurement>& z) {
  if (!filter_.initialized()) {
    if (z) filter_.initialize(*z);
    return;
  }
  const double gap = world_.t - filter_.time();
  if (gap > 1e-12) filter_.predict(gap);
  if (z) filter_.update(*z);
  ++log_.diagnostics.filter_steps;
}

void Simulation::control_step() {
  const auto& mp = controller_.config();
  const double t = world_.t;
  const double dt = log_.dt;

  const int steps = std::max(mp.mp, metric_ticks_);
  const usv::PredictionHorizon full = usv::predict_horizon(filter_, steps, controller_.model().dt(), t);
  horizon_ = head(full, static_cast<std::size_t>(mp.mp));

  if (t >= config_.warmup - 1e-9) {
    for (double h : config_.metric_horizons) {
      const int n = static_cast<int>(std::lround(h / controller_.model().dt()));
      const auto& s = full.states[static_cast<std::size_t>(n - 1)];
      log_.predictions.push_back(
          PredictionSample{world_.tick, world_.tick + static_cast<std::int64_t>(std::lround(h / dt)), h, s.x, s.y});
    }
  }

  const auto& phase = mission_.phase();
  mpc::ReferenceRequest req;
  req.mode = mission::reference_mode_for(phase.phase);
  req.follow_height = config_.follow_height;
  req.descent_rate = config_.descent_rate;
  req.land_floor_offset = config_.land_floor_offset;
  req.climb_height = config_.mission.climb_height;
  req.deck_z_estimate = mission_.climb_deck_z();
  req.search_elapsed = phase.phase == mission::Phase::kSearch ? t - phase.entered_at : 0.0;
  req.uav_z = world_.uav_truth.position(uav::kAxisZ);
  req.uav_psi = world_.uav_truth.position(uav::kAxisPsi);
  const mpc::ReferenceTrajectory ref = mpc::build_reference(*horizon_, req);

  const int shift = config_.cadence.mpc_period_ticks();
  std::optional<mpc::MpcSolution> warm;
  uav::UavInput u_prev = uav::UavInput::Zero();
  if (last_solution_) {
    u_prev = last_solution_->inputs[static_cast<std::size_t>(std::min<int>(shift, mp.mc) - 1)];
    warm = mpc::shift_solution(*last_solution_, shift);
  }

  const auto start = std::chrono::steady_clock::now();
  mpc::MpcSolution sol = controller_.solve(world_.uav_truth, u_prev, ref, warm);
  const auto stop = std::chrono::steady_clock::now();

  auto& d = log_.diagnostics;
  d.solve_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  ++d.solves;
  if (!sol.converged) ++d.unconverged_solves;
  d.max_kkt_residual = std::max(d.max_kkt_residual, sol.kkt_residual);
  for (const auto& u : sol.inputs) {
    if ((u.array() < mp.u_min.array() - 1e-9).any() || (u.array() > mp.u_max.array() + 1e-9).any()) {
      ++d.bound_violations;
    }
  }

  command_ = mpc::extract_command(sol, mp.command_lookahead, t);
  last_solution_ = std::move(sol);
}

void Simulation::step() {
  const std::int64_t k = world_.tick;
  const double dt = log_.dt;
  world_.t = static_cast<double>(k) * dt;
  const double t = world_.t;

  steering_ = external_steering_ ? *external_steering_ : scripted_.command(t, world_.usv_truth);
  steering_.t = t;

  measured_this_tick_ = false;
  if (config_.cadence.is_sensor_tick(k)) {
    const auto z = sense_pose(world_, config_.sensor, sensor_rng_);
    measured_this_tick_ = z.has_value();
    filter_step(z);
  } else {
    world_.marker_visible = marker_in_view(world_.usv_truth, world_.uav_truth, config_.sensor.camera);
  }
  if (world_.marker_visible) last_seen_t_ = t;

  bool trigger = false;
  if (mission_.phase().phase == mission::Phase::kFollow) {
    if (landing_requested_) trigger = true;
    if (trigger_tick_ && k >= *trigger_tick_ && filter_.initialized()) trigger = true;
  }
  landing_requested_ = false;

  mission::Observables obs;
  obs.t = t;
  obs.relative = mission::RelativePose{world_.uav_truth.position(uav::kAxisX) - world_.usv_truth.x,
                                       world_.uav_truth.position(uav::kAxisY) - world_.usv_truth.y,
                                       world_.uav_truth.position(uav::kAxisZ) - world_.usv_truth.z};
  obs.marker_visible = world_.marker_visible;
  obs.last_seen_t = last_seen_t_;
  obs.trigger = trigger;
  obs.uav_z = world_.uav_truth.position(uav::kAxisZ);
  obs.deck_z_estimate = filter_.initialized() ? filter_.state().z : world_.usv_truth.z;
  const std::size_t attempts_before = mission_.attempts().size();
  mission_.update(obs);
  if (trigger && mission_.attempts().size() > attempts_before) {
    trigger_tick_.reset();
  }
  // Schedule the next attempt once the marker is reacquired.
  if (config_.landing && !trigger_tick_ && mission_.phase().phase == mission::Phase::kFollow &&
      static_cast<int>(mission_.attempts().size()) < config_.max_attempts && !mission_.attempts().empty()) {
    trigger_tick_ = k + static_cast<std::int64_t>(std::lround(config_.retrigger_delay / dt));
  }

  if (filter_.initialized() && k % config_.cadence.mpc_period_ticks() == 0) {
    control_step();
  }

  if (config_.record_rows) {
    LogRow row;
    row.tick = k;
    row.t = t;
    row.usv = world_.usv_truth;
    row.uav_x = world_.uav_truth.position(uav::kAxisX);
    row.uav_y = world_.uav_truth.position(uav::kAxisY);
    row.uav_z = world_.uav_truth.position(uav::kAxisZ);
    row.uav_psi = world_.uav_truth.position(uav::kAxisPsi);
    row.uav_vx = world_.uav_truth.velocity(uav::kAxisX);
    row.uav_vy = world_.uav_truth.velocity(uav::kAxisY);
    row.uav_vz = world_.uav_truth.velocity(uav::kAxisZ);
    row.estimate_valid = filter_.initialized();
    if (row.estimate_valid) row.estimate = filter_.state();
    row.visible = world_.marker_visible;
    row.measured = measured_this_tick_;
    row.phase = mission_.phase().phase;
    row.command = command_;
    row.steering = steering_;
    log_.rows.push_back(row);
  }

  world_.usv_truth = usv_plant_step(world_.usv_truth, steering_, dt, config_.usv_plant);
  world_.uav_truth = uav_plant_step(world_.uav_truth, command_, dt, config_.uav_plant);
  world_.tick = k + 1;
  world_.t = static_cast<double>(world_.tick) * dt;
}

ScenarioLog Simulation::finish() {
  mission_.finalize(world_.t, distance_to_deck());
  log_.attempts = mission_.attempts();
  log_.phase_events = mission_.events();
  log_.diagnostics.min_covariance_eigenvalue = filter_.min_eigenvalue_seen();
  return log_;
}

ScenarioLog run_scenario(const ScenarioScript& script, const StackConfig& config, std::uint64_t seed) {
  Simulation sim(script, config, seed);
  while (!sim.done()) sim.step();
  return sim.finish();
}

void write_log_csv(std::ostream& out, const ScenarioLog& log) {
  out << "tick,t,usv_x,usv_y,usv_z,usv_eta,usv_vx,usv_vy,usv_etadot,"
         "uav_x,uav_y,uav_z,uav_psi,uav_vx,uav_vy,uav_vz,"
         "est_valid,est_x,est_y,est_z,est_eta,est_vx,est_vy,est_etadot,"
         "visible,measured,phase,cmd_vx,cmd_vy,cmd_vz,cmd_psidot,steer_surge,steer_yaw\n";
  for (const auto& r : log.rows) {
    out << fmt::format("{},{:.2f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},", r.tick, r.t, r.usv.x, r.usv.y,
                       r.usv.z, r.usv.eta, r.usv.xdot, r.usv.ydot, r.usv.etadot);
    out << fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},", r.uav_x, r.uav_y, r.uav_z, r.uav_psi,
                       r.uav_vx, r.uav_vy, r.uav_vz);
    out << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},", r.estimate_valid ? 1 : 0, r.estimate.x,
                       r.estimate.y, r.estimate.z, r.estimate.eta, r.estimate.xdot, r.estimate.ydot,
                       r.estimate.etadot);
    out << fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.visible ? 1 : 0, r.measured ? 1 : 0,
                       mission::to_string(r.phase), r.command.velocity.x(), r.command.velocity.y(),
                       r.command.velocity.z(), r.command.heading_rate, r.steering.surge_speed, r.steering.yaw_rate);
  }
}

void write_events_jsonl(std::ostream& out, const ScenarioLog& log) {
  for (const auto& e : log.phase_events) {
    nlohmann::json j = {{"type", "phase"},
                        {"t", e.t},
                        {"from", std::string(mission::to_string(e.from))},
                        {"to", std::string(mission::to_string(e.to))}};
    out << j.dump() << '\n';
  }
  for (const auto& a : log.attempts) {
    nlohmann::json j = {{"type", "attempt"},
                        {"t_trigger", a.t_trigger},
                        {"outcome", a.outcome},
                        {"t_outcome", a.t_outcome ? nlohmann::json(*a.t_outcome) : nlohmann::json(nullptr)},
                        {"final_offset", a.final_offset}};
    if (!a.reason.empty()) j["reason"] = a.reason;
    out << j.dump() << '\n';
  }
}

}  // namespace deckchase::sim
