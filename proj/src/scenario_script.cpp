#include "deckchase/scenario_script.hpp"

#include "deckchase/angles.hpp"
#include "deckchase/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace deckchase::sim {
namespace {

// Steady turning speed of the plant under the default coupling.
double turn_speed(double surge, double yaw_rate) {
  return surge / (1.0 + UsvPlantParams{}.turn_speed_coupling * std::abs(yaw_rate));
}

void append_laps(ScenarioScript& s, const std::vector<TimelineEntry>& lap, double period, int laps) {
  for (int k = 0; k < laps; ++k) {
    for (const auto& e : lap) {
      s.timeline.push_back(TimelineEntry{e.t + k * period, e.surge_speed, e.yaw_rate});
    }
  }
  s.lap_period = period;
}

}  // namespace

void ScenarioScript::validate() const {
  if (name.empty()) throw InvalidArgument("scenario needs a name");
  if (!(duration > 0.0)) throw InvalidArgument(fmt::format("scenario '{}' needs a positive duration", name));
  if (!timeline.empty() && !waypoints.empty()) {
    throw InvalidArgument(fmt::format("scenario '{}' has both a timeline and waypoints", name));
  }
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    const auto& e = timeline[i];
    if (!std::isfinite(e.t) || !std::isfinite(e.surge_speed) || !std::isfinite(e.yaw_rate)) {
      throw InvalidArgument(fmt::format("scenario '{}': timeline entry {} is not finite", name, i));
    }
    if (i > 0 && e.t < timeline[i - 1].t) {
      throw InvalidArgument(fmt::format("scenario '{}': timeline times must be non-decreasing", name));
    }
  }
  if (!waypoints.empty() && !(waypoint_radius > 0.0)) {
    throw InvalidArgument(fmt::format("scenario '{}': waypoint radius must be positive", name));
  }
}

ScriptedSteering::ScriptedSteering(const ScenarioScript& script) : script_(&script) {}

SteeringCommand ScriptedSteering::command(double t, const usv::UsvState& truth) {
  const auto& s = *script_;
  if (!s.waypoints.empty()) {
    if (waypoint_index_ >= s.waypoints.size()) {
      return SteeringCommand{0.0, 0.0, t};
    }
    const Waypoint& wp = s.waypoints[waypoint_index_];
    if (std::hypot(wp.x - truth.x, wp.y - truth.y) < s.waypoint_radius) {
      ++waypoint_index_;
      if (waypoint_index_ >= s.waypoints.size() && s.loop_waypoints) waypoint_index_ = 0;
      return command(t, truth);
    }
    const double bearing = std::atan2(wp.y - truth.y, wp.x - truth.x);
    const double err = wrap_angle(bearing - truth.eta);
    const double max_rate = UsvPlantParams{}.max_yaw_rate;
    return SteeringCommand{s.waypoint_speed, std::clamp(s.waypoint_yaw_gain * err, -max_rate, max_rate), t};
  }
  if (s.timeline.empty() || t < s.timeline.front().t) {
    return SteeringCommand{0.0, 0.0, t};
  }
  while (timeline_index_ + 1 < s.timeline.size() && s.timeline[timeline_index_ + 1].t <= t) {
    ++timeline_index_;
  }
  // Allow callers to move backwards in time (fresh queries).
  while (timeline_index_ > 0 && s.timeline[timeline_index_].t > t) {
    --timeline_index_;
  }
  const auto& e = s.timeline[timeline_index_];
  return SteeringCommand{e.surge_speed, e.yaw_rate, t};
}

namespace {

std::vector<TimelineEntry> figure8_lap(double surge, double yaw_rate, double t_half, double& period) {
  const double t_loop = 1.5 * kPi / yaw_rate;
  period = 4.0 * t_half + 2.0 * t_loop;
  return {
      {0.0, surge, 0.0},
      {t_half, surge, yaw_rate},
      {t_half + t_loop, surge, 0.0},
      {3.0 * t_half + t_loop, surge, -yaw_rate},
      {3.0 * t_half + 2.0 * t_loop, surge, 0.0},
  };
}

struct LapResult {
  double drift = 0.0;  // net displacement along the heading bisector over one settled lap
  double speed = 0.0;  // speed at the start of the settled lap
};

LapResult figure8_drift(double surge, double yaw_rate, double t_half) {
  ScenarioScript s;
  s.name = "figure8";
  double period = 0.0;
  const auto lap = figure8_lap(surge, yaw_rate, t_half, period);
  append_laps(s, lap, period, 2);
  s.duration = 2.0 * period;
  ScriptedSteering steering(s);
  const double dt = 0.01;
  const double heading = kPi / 4.0;
  usv::UsvState st;
  st.eta = heading;
  st.xdot = surge * std::cos(heading);
  st.ydot = surge * std::sin(heading);
  LapResult r;
  double x0 = 0.0;
  const auto lap_tick = static_cast<std::int64_t>(std::ceil(period / dt - 1e-9));
  for (std::int64_t k = 0; k < 2 * lap_tick; ++k) {
    if (k == lap_tick) {
      x0 = st.x;
      r.speed = st.horizontal_speed();
    }
    st = usv_plant_step(st, steering.command(static_cast<double>(k) * dt, st), dt);
  }
  r.drift = st.x - x0;
  return r;
}

}  // namespace

ScenarioScript figure8_scenario(double surge, double yaw_rate, int laps) {
  ScenarioScript s;
  s.name = "figure8";
  // The loops are mirror images, so a lap can only drift along the heading
  // bisector. Pick the diagonal length that cancels that drift.
  double lo = 0.0;
  double hi = 2.0 * turn_speed(surge, yaw_rate) / yaw_rate / surge;
  LapResult at_lo = figure8_drift(surge, yaw_rate, lo);
  for (int i = 0; i < 40 && hi - lo > 1e-4; ++i) {
    const double mid = 0.5 * (lo + hi);
    const LapResult r = figure8_drift(surge, yaw_rate, mid);
    if ((r.drift < 0.0) == (at_lo.drift < 0.0)) {
      lo = mid;
      at_lo = r;
    } else {
      hi = mid;
    }
  }
  const double t_half = 0.5 * (lo + hi);
  double period = 0.0;
  const auto lap = figure8_lap(surge, yaw_rate, t_half, period);
  append_laps(s, lap, period, laps);
  s.duration = laps * period + 2.5;
  s.initial_heading = kPi / 4.0;
  s.initial_speed = figure8_drift(surge, yaw_rate, t_half).speed;
  return s;
}

ScenarioScript triangle_scenario(double surge, double yaw_rate, int laps) {
  ScenarioScript s;
  s.name = "triangle";
  const double t_turn = (2.0 * kPi / 3.0) / yaw_rate;
  const double t_straight = t_turn;
  std::vector<TimelineEntry> lap;
  for (int side = 0; side < 3; ++side) {
    const double t0 = side * (t_straight + t_turn);
    lap.push_back({t0, surge, 0.0});
    lap.push_back({t0 + t_straight, surge, yaw_rate});
  }
  const double period = 3.0 * (t_straight + t_turn);
  append_laps(s, lap, period, laps);
  s.timeline.push_back({laps * period, surge, 0.0});
  s.duration = laps * period + 2.5;
  s.initial_speed = surge;
  return s;
}

ScenarioScript straight_scenario(double surge, double duration) {
  ScenarioScript s;
  s.name = "straight";
  s.timeline = {{0.0, surge, 0.0}};
  s.duration = duration;
  s.initial_speed = surge;
  return s;
}

ScenarioScript turn_scenario(double surge, double yaw_rate, double duration) {
  ScenarioScript s;
  s.name = "turn";
  s.timeline = {{0.0, surge, yaw_rate}};
  s.duration = duration;
  s.initial_speed = turn_speed(surge, yaw_rate);
  return s;
}

ScenarioScript idle_scenario(double duration) {
  ScenarioScript s;
  s.name = "idle";
  s.duration = duration;
  return s;
}

std::vector<std::string> builtin_scenario_names() { return {"figure8", "triangle", "straight", "turn"}; }

ScenarioScript builtin_scenario(const std::string& name) {
  if (name == "figure8") return figure8_scenario();
  if (name == "triangle") return triangle_scenario();
  if (name == "straight") return straight_scenario();
  if (name == "turn") return turn_scenario();
  std::string valid;
  for (const auto& n : builtin_scenario_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw InvalidArgument(fmt::format("unknown scenario '{}'; valid scenarios: {}", name, valid));
}

ScenarioScript scenario_from_json(const nlohmann::json& doc) {
  try {
    ScenarioScript s;
    s.name = doc.at("name").get<std::string>();
    s.duration = doc.at("duration").get<double>();
    s.measurement_noise = doc.value("noise", true);
    s.lap_period = doc.value("lap_period", 0.0);
    if (doc.contains("initial")) {
      const auto& init = doc.at("initial");
      s.initial_x = init.value("x", 0.0);
      s.initial_y = init.value("y", 0.0);
      s.initial_heading = init.value("heading", 0.0);
      s.initial_speed = init.value("speed", 0.0);
    }
    if (doc.contains("timeline")) {
      for (const auto& e : doc.at("timeline")) {
        s.timeline.push_back(
            {e.at("t").get<double>(), e.at("surge_speed").get<double>(), e.at("yaw_rate").get<double>()});
      }
    }
    if (doc.contains("waypoints")) {
      for (const auto& w : doc.at("waypoints")) {
        if (w.is_array()) {
          s.waypoints.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
        } else {
          s.waypoints.push_back({w.at("x").get<double>(), w.at("y").get<double>()});
        }
      }
      s.waypoint_speed = doc.value("waypoint_speed", s.waypoint_speed);
      s.waypoint_radius = doc.value("waypoint_radius", s.waypoint_radius);
      s.loop_waypoints = doc.value("loop", s.loop_waypoints);
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("invalid scenario document: {}", e.what()));
  }
}

nlohmann::json scenario_to_json(const ScenarioScript& s) {
  nlohmann::json doc;
  doc["name"] = s.name;
  doc["duration"] = s.duration;
  doc["noise"] = s.measurement_noise;
  doc["lap_period"] = s.lap_period;
  doc["initial"] = {{"x", s.initial_x}, {"y", s.initial_y}, {"heading", s.initial_heading}, {"speed", s.initial_speed}};
  if (!s.timeline.empty()) {
    auto& tl = doc["timeline"] = nlohmann::json::array();
    for (const auto& e : s.timeline) tl.push_back({{"t", e.t}, {"surge_speed", e.surge_speed}, {"yaw_rate", e.yaw_rate}});
  }
  if (!s.waypoints.empty()) {
    auto& wps = doc["waypoints"] = nlohmann::json::array();
    for (const auto& w : s.waypoints) wps.push_back({w.x, w.y});
    doc["waypoint_speed"] = s.waypoint_speed;
    doc["waypoint_radius"] = s.waypoint_radius;
    doc["loop"] = s.loop_waypoints;
  }
  return doc;
}

ScenarioScript load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open scenario file '{}'", path));
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("scenario file '{}' is not valid JSON: {}", path, e.what()));
  }
  return scenario_from_json(doc);
}

}  // namespace deckchase::sim
