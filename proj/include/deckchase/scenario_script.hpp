#pragma once

#include "deckchase/sim_world.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace deckchase::sim {

struct TimelineEntry {
  double t = 0.0;  // command holds from t until the next entry
  double surge_speed = 0.0;
  double yaw_rate = 0.0;
};

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
};

struct ScenarioScript {
  std::string name;
  std::vector<TimelineEntry> timeline;
  // Alternative to a timeline: the vessel steers through these points.
  std::vector<Waypoint> waypoints;
  double waypoint_speed = 3.0;
  double waypoint_radius = 2.0;
  double waypoint_yaw_gain = 1.0;
  bool loop_waypoints = true;

  double duration = 60.0;
  bool measurement_noise = true;
  // Period of one lap of the shape, where meaningful (0 otherwise).
  double lap_period = 0.0;

  double initial_x = 0.0;
  double initial_y = 0.0;
  double initial_heading = 0.0;
  double initial_speed = 0.0;

  void validate() const;
};

/// Resolves steering commands for a script, tracking waypoint progress.
class ScriptedSteering {
 public:
  explicit ScriptedSteering(const ScenarioScript& script);
  SteeringCommand command(double t, const usv::UsvState& truth);

 private:
  const ScenarioScript* script_;
  std::size_t timeline_index_ = 0;
  std::size_t waypoint_index_ = 0;
};

// Built-in shapes. Figure-8: two 270 deg loops joined by diagonals crossing
// once per lap. Triangle: three 120 deg heading changes, equal time turning
// and straight.
ScenarioScript figure8_scenario(double surge = 3.0, double yaw_rate = 0.5, int laps = 2);
ScenarioScript triangle_scenario(double surge = 3.0, double yaw_rate = 0.5, int laps = 3);
ScenarioScript straight_scenario(double surge = 3.0, double duration = 40.0);
ScenarioScript turn_scenario(double surge = 3.0, double yaw_rate = 0.5, double duration = 40.0);
/// Script with no commands, for externally steered sessions.
ScenarioScript idle_scenario(double duration = 1e9);

std::vector<std::string> builtin_scenario_names();
/// Throws InvalidArgument naming the valid scenarios.
ScenarioScript builtin_scenario(const std::string& name);

ScenarioScript scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const ScenarioScript& script);
ScenarioScript load_scenario_file(const std::string& path);

}  // namespace deckchase::sim
