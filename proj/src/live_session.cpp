#include "deckchase/live_session.hpp"

#include "deckchase/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace deckchase::server {
namespace {

sim::StackConfig live_config(sim::StackConfig config) {
  config.record_rows = false;
  config.metric_horizons.clear();
  config.landing = false;
  return config;
}

}  // namespace

LiveSession::LiveSession(LiveOptions options)
    : options_(std::move(options)),
      inbound_(options_.inbound_capacity),
      outbound_(options_.outbound_capacity) {
  if (options_.broadcast_hz <= 0 || options_.config.cadence.world_hz % options_.broadcast_hz != 0) {
    throw InvalidConfig("broadcast rate must divide the world rate");
  }
  if (!(options_.disconnect_decay > 0.0)) throw InvalidConfig("disconnect decay must be positive");
  options_.config = live_config(options_.config);
  reset(options_.seed);
}

LiveSession::~LiveSession() { stop(); }

bool LiveSession::post(ClientEvent event) { return inbound_.try_push(std::move(event)); }

void LiveSession::reply(ClientId to, std::string message) {
  outbound_.push_evicting(Outgoing{to, wire::serialize(wire::ErrorMessage{std::move(message)})});
}

void LiveSession::reset(std::uint64_t seed) {
  options_.seed = seed;
  sim_ = std::make_unique<sim::Simulation>(options_.script, options_.config, seed);
  setpoint_ = sim::SteeringCommand{};
  decay_from_.reset();
}

void LiveSession::apply(const ClientEvent& event) {
  const ClientId id = event.client;
  if (std::holds_alternative<ClientConnected>(event.payload)) {
    if (std::find(clients_.begin(), clients_.end(), id) == clients_.end()) clients_.push_back(id);
    if (!driver_) driver_ = id;
    return;
  }
  if (std::holds_alternative<ClientDisconnected>(event.payload)) {
    std::erase(clients_, id);
    if (driver_ == id) {
      decay_from_ = setpoint_;
      decay_start_tick_ = sim_->world().tick;
      driver_ = clients_.empty() ? std::nullopt : std::optional<ClientId>(clients_.front());
    }
    return;
  }
  if (driver_ != id) {
    reply(id, "only the first connected client may control the session");
    return;
  }
  const auto& msg = std::get<wire::ClientMessage>(event.payload);
  if (const auto* steer = std::get_if<wire::SteerMessage>(&msg)) {
    const auto& plant = options_.config.usv_plant;
    setpoint_.surge_speed = std::clamp(steer->surge_speed, -plant.max_surge, plant.max_surge);
    setpoint_.yaw_rate = std::clamp(steer->yaw_rate, -plant.max_yaw_rate, plant.max_yaw_rate);
    decay_from_.reset();
  } else if (std::holds_alternative<wire::TriggerLandingMessage>(msg)) {
    if (sim_->mission().phase().phase != mission::Phase::kFollow) {
      reply(id, fmt::format("landing can only be triggered in FOLLOW (current phase {})",
                            mission::to_string(sim_->mission().phase().phase)));
    } else {
      sim_->request_landing();
    }
  } else if (const auto* r = std::get_if<wire::ResetMessage>(&msg)) {
    reset(r->seed);
  }
}

void LiveSession::step_once() {
  for (const auto& event : inbound_.drain()) apply(event);

  if (decay_from_) {
    const double elapsed = static_cast<double>(sim_->world().tick - decay_start_tick_) * sim_->config().cadence.dt();
    const double frac = std::max(0.0, 1.0 - elapsed / options_.disconnect_decay);
    setpoint_.surge_speed = decay_from_->surge_speed * frac;
    setpoint_.yaw_rate = decay_from_->yaw_rate * frac;
    if (frac <= 0.0) decay_from_.reset();
  }
  sim_->set_external_steering(setpoint_);
  sim_->step();

  const int period = sim_->config().cadence.world_hz / options_.broadcast_hz;
  if (sim_->world().tick % period == 0) {
    outbound_.push_evicting(Outgoing{std::nullopt, wire::serialize(snapshot())});
  }
}

wire::StateMessage LiveSession::snapshot() const {
  const auto& w = sim_->world();
  wire::StateMessage m;
  m.t = w.t;
  m.usv = wire::UsvView{w.usv_truth.x,   w.usv_truth.y, w.usv_truth.z, w.usv_truth.eta, w.usv_truth.horizontal_speed(),
                        w.usv_truth.etadot};
  m.uav = wire::UavView{w.uav_truth.position(uav::kAxisX), w.uav_truth.position(uav::kAxisY),
                        w.uav_truth.position(uav::kAxisZ), w.uav_truth.position(uav::kAxisPsi)};
  if (const auto& h = sim_->horizon()) {
    m.horizon.reserve(h->size());
    for (const auto& s : h->states) m.horizon.push_back({s.x, s.y});
  }
  m.phase = std::string(mission::to_string(sim_->mission().phase().phase));
  const auto& attempts = sim_->mission().attempts();
  const auto successes = std::count_if(attempts.begin(), attempts.end(), [](const auto& a) { return a.success(); });
  m.metrics = {{"follow_distance", std::hypot(m.uav.x - m.usv.x, m.uav.y - m.usv.y)},
               {"height_above_deck", m.uav.z - m.usv.z},
               {"marker_visible", w.marker_visible},
               {"attempts", attempts.size()},
               {"successes", successes},
               {"tick", w.tick}};
  return m;
}

void LiveSession::start() {
  if (loop_.joinable()) return;
  loop_ = std::jthread([this](std::stop_token stop) {
    using clock = std::chrono::steady_clock;
    const auto dt = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(sim_->config().cadence.dt()));
    auto next = clock::now();
    while (!stop.stop_requested()) {
      step_once();
      next += dt;
      const auto now = clock::now();
      // After a stall, resume from now instead of replaying the backlog.
      if (now - next > std::chrono::milliseconds(100)) next = now;
      std::this_thread::sleep_until(next);
    }
  });
}

void LiveSession::stop() {
  if (loop_.joinable()) {
    loop_.request_stop();
    loop_.join();
  }
}

}  // namespace deckchase::server
