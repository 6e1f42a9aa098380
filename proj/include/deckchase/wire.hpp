#pragma once

// JSON messages exchanged with the browser cockpit over /ws. Every message
// is an object with a "type" tag; unknown tags and unknown or missing fields
// are rejected in both directions.

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace deckchase::wire {

struct UsvView {
  double x = 0.0, y = 0.0, z = 0.0, eta = 0.0;
  double speed = 0.0;
  double yaw_rate = 0.0;
};

struct UavView {
  double x = 0.0, y = 0.0, z = 0.0, psi = 0.0;
};

struct StateMessage {
  double t = 0.0;
  UsvView usv;
  UavView uav;
  std::vector<std::array<double, 2>> horizon;
  std::string phase;
  nlohmann::json metrics = nlohmann::json::object();  // flat object of numbers / booleans
};

struct ErrorMessage {
  std::string message;
};

struct SteerMessage {
  double surge_speed = 0.0;
  double yaw_rate = 0.0;
};

struct TriggerLandingMessage {};

struct ResetMessage {
  std::uint64_t seed = 0;
};

using ServerMessage = std::variant<StateMessage, ErrorMessage>;
using ClientMessage = std::variant<SteerMessage, TriggerLandingMessage, ResetMessage>;

/// Throws ParseError describing the first schema violation.
ClientMessage parse_client_message(std::string_view text);
ServerMessage parse_server_message(std::string_view text);

nlohmann::json to_json(const ServerMessage& msg);
nlohmann::json to_json(const ClientMessage& msg);
std::string serialize(const ServerMessage& msg);
std::string serialize(const ClientMessage& msg);

/// Schema checks on already-parsed documents; throw ParseError.
void validate_server_json(const nlohmann::json& doc);
void validate_client_json(const nlohmann::json& doc);

}  // namespace deckchase::wire
