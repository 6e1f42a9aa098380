#pragma once

// Real-time interactive session. The simulation runs on its own loop and
// talks to the network side only through two bounded queues: client events
// in, outgoing messages (broadcast snapshots and per-client replies) out.

#include "deckchase/bounded_queue.hpp"
#include "deckchase/scenario_runner.hpp"
#include "deckchase/wire.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <variant>

namespace deckchase::server {

using ClientId = std::uint64_t;

struct ClientConnected {};
struct ClientDisconnected {};

struct ClientEvent {
  ClientId client = 0;
  std::variant<ClientConnected, ClientDisconnected, wire::ClientMessage> payload;
};

struct Outgoing {
  std::optional<ClientId> to;  // nullopt broadcasts
  std::string text;
};

struct LiveOptions {
  sim::ScenarioScript script = sim::idle_scenario();
  sim::StackConfig config;
  std::uint64_t seed = 1;
  int broadcast_hz = 20;
  double disconnect_decay = 1.0;  // s to ramp steering to zero after the driver leaves
  std::size_t inbound_capacity = 256;
  std::size_t outbound_capacity = 64;
};

class LiveSession {
 public:
  explicit LiveSession(LiveOptions options);
  ~LiveSession();

  // Network side. Returns false when the inbound queue is full.
  bool post(ClientEvent event);
  std::vector<Outgoing> take_outgoing() { return outbound_.drain(); }

  // Loop side.
  /// Applies queued events at the tick boundary, then advances one tick.
  void step_once();
  void start();  // spawns the real-time loop
  void stop();

  // Loop-thread views; not synchronized.
  const sim::Simulation& simulation() const { return *sim_; }
  std::optional<ClientId> driver() const { return driver_; }
  const sim::SteeringCommand& steering_setpoint() const { return setpoint_; }

  wire::StateMessage snapshot() const;

 private:
  void apply(const ClientEvent& event);
  void reset(std::uint64_t seed);
  void reply(ClientId to, std::string message);

  LiveOptions options_;
  std::unique_ptr<sim::Simulation> sim_;
  BoundedQueue<ClientEvent> inbound_;
  BoundedQueue<Outgoing> outbound_;

  std::vector<ClientId> clients_;  // connection order; the first is the driver
  std::optional<ClientId> driver_;
  sim::SteeringCommand setpoint_;
  // Steering frozen at disconnect and the tick the decay started.
  std::optional<sim::SteeringCommand> decay_from_;
  std::int64_t decay_start_tick_ = 0;

  std::jthread loop_;
};

}  // namespace deckchase::server
