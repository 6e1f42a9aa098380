#include "deckchase/angles.hpp"
#include "deckchase/errors.hpp"
#include "deckchase/scenario_script.hpp"
#include "deckchase/sim_world.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace deckchase;
using namespace deckchase::sim;

namespace {

std::vector<usv::UsvState> drive(const ScenarioScript& script, double duration) {
  usv::UsvState s;
  s.x = script.initial_x;
  s.y = script.initial_y;
  s.eta = script.initial_heading;
  s.xdot = script.initial_speed * std::cos(s.eta);
  s.ydot = script.initial_speed * std::sin(s.eta);
  ScriptedSteering steering(script);
  std::vector<usv::UsvState> path;
  const int ticks = static_cast<int>(std::lround(duration / 0.01));
  for (int k = 0; k < ticks; ++k) {
    path.push_back(s);
    s = usv_plant_step(s, steering.command(k * 0.01, s), 0.01);
  }
  return path;
}

bool segments_cross(const usv::UsvState& a, const usv::UsvState& b, const usv::UsvState& c, const usv::UsvState& d) {
  auto orient = [](double px, double py, double qx, double qy, double rx, double ry) {
    return (qx - px) * (ry - py) - (qy - py) * (rx - px);
  };
  const double d1 = orient(a.x, a.y, b.x, b.y, c.x, c.y);
  const double d2 = orient(a.x, a.y, b.x, b.y, d.x, d.y);
  const double d3 = orient(c.x, c.y, d.x, d.y, a.x, a.y);
  const double d4 = orient(c.x, c.y, d.x, d.y, b.x, b.y);
  return d1 * d2 < 0.0 && d3 * d4 < 0.0;
}

}  // namespace

TEST(UavPlant, VelocityStepSettlesWithSmallOvershoot) {
  uav::UavState x;
  mpc::ControlCommand cmd;
  cmd.velocity = Eigen::Vector3d(2.0, -1.0, 0.5);
  double peak = 0.0;
  for (int k = 0; k < 500; ++k) {
    x = uav_plant_step(x, cmd, 0.01);
    peak = std::max(peak, x.velocity(uav::kAxisX));
  }
  EXPECT_LT(peak, 2.0 * 1.1);
  EXPECT_NEAR(x.velocity(uav::kAxisX), 2.0, 1e-3);
  EXPECT_NEAR(x.velocity(uav::kAxisY), -1.0, 1e-3);
  EXPECT_NEAR(x.velocity(uav::kAxisZ), 0.5, 1e-3);
  EXPECT_GT(x.position(uav::kAxisX), 0.0);
}

TEST(UavPlant, RespectsLimitsAndFloor) {
  const UavPlantParams p;
  uav::UavState x;
  x.position(uav::kAxisZ) = 0.5;
  mpc::ControlCommand cmd;
  cmd.velocity = Eigen::Vector3d(20.0, 20.0, -20.0);
  cmd.heading_rate = 9.0;
  for (int k = 0; k < 800; ++k) {
    const auto next = uav_plant_step(x, cmd, 0.01);
    const Eigen::Vector3d v(next.velocity(uav::kAxisX), next.velocity(uav::kAxisY), next.velocity(uav::kAxisZ));
    EXPECT_LE(v.norm(), p.v_max + 1e-9);
    EXPECT_LE(std::abs(next.acceleration(uav::kAxisX)), p.a_max + 1e-12);
    EXPECT_LE(std::abs(next.acceleration(uav::kAxisX) - x.acceleration(uav::kAxisX)), p.j_max * 0.01 + 1e-12);
    EXPECT_GE(next.position(uav::kAxisZ), p.floor_z);
    EXPECT_LE(std::abs(next.velocity(uav::kAxisPsi)), p.heading_rate_max + 1e-9);
    x = next;
  }
  EXPECT_EQ(x.position(uav::kAxisZ), p.floor_z);
}

TEST(UsvPlant, SteadyTurnRadiusAndSpeedDip) {
  const UsvPlantParams p;
  usv::UsvState s;
  s.xdot = 3.0;
  const SteeringCommand cmd{3.0, 0.5, 0.0};
  double min_speed = 1e9;
  std::vector<usv::UsvState> tail;
  for (int k = 0; k < 4000; ++k) {
    s = usv_plant_step(s, cmd, 0.01, p);
    min_speed = std::min(min_speed, s.horizontal_speed());
    EXPECT_LE(s.horizontal_speed(), 3.0 + 1e-6);
    if (k >= 2000) tail.push_back(s);
  }
  // Steady state of the hull-frame velocity: surge relaxes toward the
  // attenuated target while rotation trades surge into damped sway.
  const double target = 3.0 / (1.0 + p.turn_speed_coupling * 0.5);
  const double surge = target / (1.0 + 0.25 / (p.lateral_drag_rate * p.surge_response_rate));
  const double steady_speed = surge * std::hypot(1.0, 0.5 / p.lateral_drag_rate);
  const double expected_speed = target;
  EXPECT_LT(min_speed, 3.0 - 0.3);
  EXPECT_NEAR(s.horizontal_speed(), steady_speed, 0.01);
  // Radius from the centroid of one full circle of positions.
  double cx = 0.0, cy = 0.0;
  const std::size_t lap = static_cast<std::size_t>(std::lround(kTwoPi / 0.5 / 0.01));
  for (std::size_t i = 0; i < lap; ++i) {
    cx += tail[i].x;
    cy += tail[i].y;
  }
  cx /= static_cast<double>(lap);
  cy /= static_cast<double>(lap);
  for (std::size_t i = 0; i < lap; i += 50) {
    EXPECT_NEAR(std::hypot(tail[i].x - cx, tail[i].y - cy), expected_speed / 0.5, 0.1 * expected_speed / 0.5);
  }
}

TEST(UsvPlant, StraightIsExact) {
  usv::UsvState s;
  s.eta = 0.5;
  s.xdot = 3.0 * std::cos(0.5);
  s.ydot = 3.0 * std::sin(0.5);
  for (int k = 0; k < 100; ++k) s = usv_plant_step(s, SteeringCommand{3.0, 0.0, 0.0}, 0.01);
  EXPECT_NEAR(s.x, 3.0 * std::cos(0.5), 1e-9);
  EXPECT_NEAR(s.y, 3.0 * std::sin(0.5), 1e-9);
  EXPECT_EQ(s.etadot, 0.0);
}

TEST(Camera, ConeGeometry) {
  const CameraParams cam;
  usv::UsvState deck;
  uav::UavState uav;
  uav.position(uav::kAxisZ) = 3.0;
  EXPECT_TRUE(marker_in_view(deck, uav, cam));
  uav.position(uav::kAxisX) = 10.0;
  EXPECT_FALSE(marker_in_view(deck, uav, cam));
  const double edge = 3.0 * std::tan(cam.half_angle_deg * kPi / 180.0);
  uav.position(uav::kAxisX) = edge + cam.marker_radius - 1e-6;
  EXPECT_TRUE(marker_in_view(deck, uav, cam));
  uav.position(uav::kAxisX) = edge + cam.marker_radius + 1e-6;
  EXPECT_FALSE(marker_in_view(deck, uav, cam));
  uav.position(uav::kAxisX) = 0.0;
  uav.position(uav::kAxisZ) = 0.0;
  EXPECT_FALSE(marker_in_view(deck, uav, cam));
  uav.position(uav::kAxisZ) = 100.0;
  uav.position(uav::kAxisX) = 16.0;
  EXPECT_FALSE(marker_in_view(deck, uav, cam));
}

TEST(Sensor, NoiseOffReturnsTruth) {
  WorldState w;
  w.t = 1.25;
  w.usv_truth.x = 1.0;
  w.usv_truth.y = -2.0;
  w.usv_truth.eta = 0.7;
  w.uav_truth.position(uav::kAxisX) = 1.0;
  w.uav_truth.position(uav::kAxisY) = -2.0;
  w.uav_truth.position(uav::kAxisZ) = 3.0;
  SensorParams p;
  p.noise = false;
  GaussianSource rng(1);
  const auto z = sense_pose(w, p, rng);
  ASSERT_TRUE(z.has_value());
  EXPECT_TRUE(w.marker_visible);
  EXPECT_EQ(z->t, 1.25);
  EXPECT_EQ(z->x, 1.0);
  EXPECT_EQ(z->y, -2.0);
  EXPECT_EQ(z->eta, 0.7);
  w.uav_truth.position(uav::kAxisX) = 12.0;
  EXPECT_FALSE(sense_pose(w, p, rng).has_value());
  EXPECT_FALSE(w.marker_visible);
}

TEST(Sensor, NoiseMatchesConfiguredSpread) {
  WorldState w;
  w.uav_truth.position(uav::kAxisZ) = 3.0;
  const SensorParams p;
  GaussianSource rng(5);
  std::vector<double> ex, eeta;
  for (int i = 0; i < 20000; ++i) {
    const auto z = sense_pose(w, p, rng);
    ex.push_back(z->x);
    eeta.push_back(z->eta);
  }
  auto stddev = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  EXPECT_NEAR(stddev(ex), 0.05, 0.002);
  EXPECT_NEAR(stddev(eeta), 0.02, 0.001);
}

TEST(Sensor, DrawsIndependentOfVisibility) {
  WorldState seen_world, hidden_world;
  seen_world.uav_truth.position(uav::kAxisZ) = 3.0;
  hidden_world.uav_truth.position(uav::kAxisZ) = 3.0;
  hidden_world.uav_truth.position(uav::kAxisX) = 14.0;
  GaussianSource a(9), b(9);
  const SensorParams p;
  sense_pose(seen_world, p, a);
  sense_pose(hidden_world, p, b);
  EXPECT_EQ(a.next(), b.next());
}

TEST(GaussianSource, MomentsAndDeterminism) {
  GaussianSource g(123);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.next();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
  GaussianSource a(77), b(77), c(78);
  for (int i = 0; i < 10; ++i) {
    const double x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
  GaussianSource u(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.next_uniform();
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Scenario, Figure8CrossesOncePerLap) {
  const auto s = figure8_scenario();
  ASSERT_GT(s.lap_period, 0.0);
  const auto path = drive(s, 2.5 * s.lap_period);
  // Windows start and end mid-loop, away from the diagonals.
  const auto lap = static_cast<std::size_t>(std::lround(s.lap_period / 0.01));
  const std::size_t start = lap / 4;
  for (std::size_t n = 0; n < 2; ++n) {
    const std::size_t first = start + n * lap;
    const std::size_t end = first + lap;
    int crossings = 0;
    for (std::size_t i = first; i + 1 < end; ++i) {
      for (std::size_t j = i + 2; j + 1 < end; ++j) {
        if (segments_cross(path[i], path[i + 1], path[j], path[j + 1])) ++crossings;
      }
    }
    EXPECT_EQ(crossings, 1) << "lap " << n;
  }
}

TEST(Scenario, TriangleCornersTurn120Degrees) {
  const auto s = triangle_scenario();
  const auto path = drive(s, s.lap_period + 1.0);
  // Timeline entries alternate straight / turn; compare headings at the
  // start and end of every turn.
  int corners = 0;
  for (std::size_t i = 0; i + 1 < s.timeline.size() && s.timeline[i + 1].t <= s.lap_period + 1e-9; ++i) {
    if (s.timeline[i].yaw_rate == 0.0) continue;
    const auto k0 = static_cast<std::size_t>(std::lround(s.timeline[i].t / 0.01));
    const auto k1 = static_cast<std::size_t>(std::lround(s.timeline[i + 1].t / 0.01));
    const double turned = wrap_angle(path[k1].eta - path[k0].eta) * 180.0 / kPi;
    EXPECT_NEAR(turned, 120.0, 1.0);
    ++corners;
  }
  EXPECT_EQ(corners, 3);
}

TEST(Scenario, JsonRoundTrip) {
  for (const auto& name : builtin_scenario_names()) {
    const auto s = builtin_scenario(name);
    const auto back = scenario_from_json(scenario_to_json(s));
    EXPECT_EQ(back.name, s.name);
    EXPECT_EQ(back.duration, s.duration);
    EXPECT_EQ(back.lap_period, s.lap_period);
    EXPECT_EQ(back.initial_heading, s.initial_heading);
    ASSERT_EQ(back.timeline.size(), s.timeline.size());
    for (std::size_t i = 0; i < s.timeline.size(); ++i) {
      EXPECT_EQ(back.timeline[i].t, s.timeline[i].t);
      EXPECT_EQ(back.timeline[i].yaw_rate, s.timeline[i].yaw_rate);
    }
  }
}

TEST(Scenario, UnknownNameListsValidOnes) {
  try {
    builtin_scenario("zigzag");
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("zigzag"), std::string::npos);
    EXPECT_NE(msg.find("figure8"), std::string::npos);
    EXPECT_NE(msg.find("triangle"), std::string::npos);
  }
}

TEST(Scenario, DocumentErrors) {
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"duration", 5.0}}), ParseError);
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"name", "x"}, {"duration", -1.0}}), InvalidArgument);
  const auto unordered = nlohmann::json::parse(
      R"({"name":"x","duration":5,"timeline":[{"t":1,"surge_speed":1,"yaw_rate":0},{"t":0,"surge_speed":1,"yaw_rate":0}]})");
  EXPECT_THROW(scenario_from_json(unordered), InvalidArgument);
  EXPECT_THROW(load_scenario_file("/nonexistent/scenario.json"), ParseError);
}

TEST(Scenario, WaypointSteeringVisitsPoints) {
  const auto s = scenario_from_json(nlohmann::json::parse(
      R"({"name":"wp","duration":60,"waypoints":[[20,0],[20,20]],"waypoint_speed":3,"loop":false})"));
  const auto path = drive(s, 40.0);
  double best0 = 1e9, best1 = 1e9;
  for (const auto& p : path) {
    best0 = std::min(best0, std::hypot(p.x - 20.0, p.y));
    best1 = std::min(best1, std::hypot(p.x - 20.0, p.y - 20.0));
  }
  EXPECT_LT(best0, s.waypoint_radius);
  EXPECT_LT(best1, s.waypoint_radius);
  EXPECT_LT(path.back().horizontal_speed(), 0.1);
}
