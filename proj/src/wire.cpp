#include "deckchase/wire.hpp"

#include "deckchase/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <initializer_list>
#include <type_traits>

namespace deckchase::wire {
namespace {

using nlohmann::json;

void expect_object(const json& doc, std::string_view what) {
  if (!doc.is_object()) throw ParseError(fmt::format("{} must be a JSON object", what));
}

void expect_keys(const json& doc, std::string_view what, std::initializer_list<std::string_view> keys) {
  for (auto key : keys) {
    if (!doc.contains(key)) throw ParseError(fmt::format("{} is missing field '{}'", what, key));
  }
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) throw ParseError(fmt::format("{} has unknown field '{}'", what, key));
  }
}

double number(const json& doc, std::string_view key, std::string_view what) {
  const json& v = doc.at(key);
  if (!v.is_number()) throw ParseError(fmt::format("{}.{} must be a number", what, key));
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(fmt::format("{}.{} must be finite", what, key));
  return d;
}

std::string tag_of(const json& doc) {
  expect_object(doc, "message");
  if (!doc.contains("type") || !doc.at("type").is_string()) {
    throw ParseError("message needs a string 'type' tag");
  }
  return doc.at("type").get<std::string>();
}

json parse_text(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError("message is not valid JSON");
  return doc;
}

StateMessage state_from_json(const json& doc) {
  expect_keys(doc, "state", {"type", "t", "usv", "uav", "horizon", "phase", "metrics"});
  StateMessage m;
  m.t = number(doc, "t", "state");

  const json& usv = doc.at("usv");
  expect_object(usv, "state.usv");
  expect_keys(usv, "state.usv", {"x", "y", "z", "eta", "speed", "yaw_rate"});
  m.usv = UsvView{number(usv, "x", "usv"),   number(usv, "y", "usv"),     number(usv, "z", "usv"),
                  number(usv, "eta", "usv"), number(usv, "speed", "usv"), number(usv, "yaw_rate", "usv")};

  const json& uav = doc.at("uav");
  expect_object(uav, "state.uav");
  expect_keys(uav, "state.uav", {"x", "y", "z", "psi"});
  m.uav = UavView{number(uav, "x", "uav"), number(uav, "y", "uav"), number(uav, "z", "uav"), number(uav, "psi", "uav")};

  const json& horizon = doc.at("horizon");
  if (!horizon.is_array()) throw ParseError("state.horizon must be an array");
  for (const auto& p : horizon) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ParseError("state.horizon entries must be [x, y] number pairs");
    }
    m.horizon.push_back({p[0].get<double>(), p[1].get<double>()});
  }

  if (!doc.at("phase").is_string()) throw ParseError("state.phase must be a string");
  m.phase = doc.at("phase").get<std::string>();
  static constexpr std::array<std::string_view, 5> kPhases = {"FOLLOW", "LAND", "TOUCHDOWN", "ABORT_CLIMB", "SEARCH"};
  bool known = false;
  for (auto p : kPhases) known = known || m.phase == p;
  if (!known) throw ParseError(fmt::format("state.phase '{}' is not a mission phase", m.phase));

  const json& metrics = doc.at("metrics");
  expect_object(metrics, "state.metrics");
  for (const auto& [key, value] : metrics.items()) {
    if (!value.is_number() && !value.is_boolean()) {
      throw ParseError(fmt::format("state.metrics.{} must be a number or boolean", key));
    }
  }
  m.metrics = metrics;
  return m;
}

}  // namespace

void validate_server_json(const json& doc) {
  const std::string tag = tag_of(doc);
  if (tag == "state") {
    state_from_json(doc);
  } else if (tag == "error") {
    expect_keys(doc, "error", {"type", "message"});
    if (!doc.at("message").is_string()) throw ParseError("error.message must be a string");
  } else {
    throw ParseError(fmt::format("unknown server message type '{}'", tag));
  }
}

void validate_client_json(const json& doc) {
  const std::string tag = tag_of(doc);
  if (tag == "steer") {
    expect_keys(doc, "steer", {"type", "surge_speed", "yaw_rate"});
    number(doc, "surge_speed", "steer");
    number(doc, "yaw_rate", "steer");
  } else if (tag == "trigger_landing") {
    expect_keys(doc, "trigger_landing", {"type"});
  } else if (tag == "reset") {
    expect_keys(doc, "reset", {"type", "seed"});
    const json& seed = doc.at("seed");
    if (!seed.is_number_unsigned()) {
      throw ParseError("reset.seed must be a non-negative integer");
    }
  } else {
    throw ParseError(fmt::format("unknown client message type '{}'", tag));
  }
}

ClientMessage parse_client_message(std::string_view text) {
  const json doc = parse_text(text);
  validate_client_json(doc);
  const std::string tag = doc.at("type").get<std::string>();
  if (tag == "steer") return SteerMessage{doc.at("surge_speed").get<double>(), doc.at("yaw_rate").get<double>()};
  if (tag == "trigger_landing") return TriggerLandingMessage{};
  return ResetMessage{doc.at("seed").get<std::uint64_t>()};
}

ServerMessage parse_server_message(std::string_view text) {
  const json doc = parse_text(text);
  validate_server_json(doc);
  if (doc.at("type") == "state") return state_from_json(doc);
  return ErrorMessage{doc.at("message").get<std::string>()};
}

json to_json(const ServerMessage& msg) {
  if (const auto* e = std::get_if<ErrorMessage>(&msg)) {
    return {{"type", "error"}, {"message", e->message}};
  }
  const auto& s = std::get<StateMessage>(msg);
  json horizon = json::array();
  for (const auto& p : s.horizon) horizon.push_back({p[0], p[1]});
  return {{"type", "state"},
          {"t", s.t},
          {"usv",
           {{"x", s.usv.x},
            {"y", s.usv.y},
            {"z", s.usv.z},
            {"eta", s.usv.eta},
            {"speed", s.usv.speed},
            {"yaw_rate", s.usv.yaw_rate}}},
          {"uav", {{"x", s.uav.x}, {"y", s.uav.y}, {"z", s.uav.z}, {"psi", s.uav.psi}}},
          {"horizon", horizon},
          {"phase", s.phase},
          {"metrics", s.metrics}};
}

json to_json(const ClientMessage& msg) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SteerMessage>) {
          return {{"type", "steer"}, {"surge_speed", m.surge_speed}, {"yaw_rate", m.yaw_rate}};
        } else if constexpr (std::is_same_v<T, TriggerLandingMessage>) {
          return {{"type", "trigger_landing"}};
        } else {
          return {{"type", "reset"}, {"seed", m.seed}};
        }
      },
      msg);
}

std::string serialize(const ServerMessage& msg) {
  const json doc = to_json(msg);
  validate_server_json(doc);
  return doc.dump();
}

std::string serialize(const ClientMessage& msg) {
  const json doc = to_json(msg);
  validate_client_json(doc);
  return doc.dump();
}

}  // namespace deckchase::wire
