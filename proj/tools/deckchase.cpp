// deckchase: batch scenario runs, pose-log replay and the live steering server.

#include "deckchase/batch.hpp"
#include "deckchase/errors.hpp"
#include "deckchase/live_session.hpp"
#include "deckchase/pose_log.hpp"
#include "deckchase/ws_server.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <cstdlib>
#include <iostream>

namespace {

using namespace deckchase;

std::atomic<bool> g_interrupted{false};

struct Overrides {
  bool no_noise = false;
  double warmup = 10.0;
  double follow_height = 3.0;
  double descent_rate = 0.5;
  double marker_radius = 0.3;
  double alpha_l = 1200.0;
  double h_d = 1.1;
  int mp = 100;
  int mc = 40;
  int sensor_hz = 30;
  int mpc_hz = 20;
  double drag_ky = 360.0;
};

void add_overrides(CLI::App* app, Overrides& o) {
  app->add_flag("--no-noise", o.no_noise, "Noiseless pose measurements");
  app->add_option("--warmup", o.warmup, "Seconds before prediction scoring and landing triggers")->check(CLI::NonNegativeNumber);
  app->add_option("--follow-height", o.follow_height, "Follow altitude above the deck, m")->check(CLI::PositiveNumber);
  app->add_option("--descent-rate", o.descent_rate, "Landing descent rate, m/s")->check(CLI::PositiveNumber);
  app->add_option("--marker-radius", o.marker_radius, "Marker half-size for visibility, m")->check(CLI::NonNegativeNumber);
  app->add_option("--alpha-l", o.alpha_l, "Touchdown velocity-matching weight")->check(CLI::NonNegativeNumber);
  app->add_option("--h-d", o.h_d, "Upper edge of the gate's waiting region, m")->check(CLI::PositiveNumber);
  app->add_option("--horizon", o.mp, "Prediction horizon Mp, steps")->check(CLI::PositiveNumber);
  app->add_option("--control-horizon", o.mc, "Control horizon Mc, steps")->check(CLI::PositiveNumber);
  app->add_option("--sensor-hz", o.sensor_hz, "Pose sensor rate")->check(CLI::PositiveNumber);
  app->add_option("--mpc-hz", o.mpc_hz, "Controller rate")->check(CLI::PositiveNumber);
  app->add_option("--drag-ky", o.drag_ky, "Filter lateral drag coefficient, kg/s")->check(CLI::NonNegativeNumber);
}

sim::StackConfig stack_from(const Overrides& o) {
  sim::StackConfig c;
  c.sensor.noise = !o.no_noise;
  c.warmup = o.warmup;
  c.follow_height = o.follow_height;
  c.descent_rate = o.descent_rate;
  c.sensor.camera.marker_radius = o.marker_radius;
  c.mpc.alpha_l = o.alpha_l;
  c.mpc.h_d = o.h_d;
  c.mpc.mp = o.mp;
  c.mpc.mc = o.mc;
  c.cadence.sensor_hz = o.sensor_hz;
  c.cadence.mpc_hz = o.mpc_hz;
  return c;
}

usv::FilterConfig filter_for(usv::EstimatorMode mode, const Overrides& o) {
  auto f = usv::FilterConfig::for_mode(mode);
  if (mode == usv::EstimatorMode::kCurvilinear) f.drag.k_y = o.drag_ky;
  return f;
}

std::vector<usv::EstimatorMode> parse_modes(const std::string& text) {
  if (text == "both") return {usv::EstimatorMode::kCurvilinear, usv::EstimatorMode::kStraightLine};
  return {usv::parse_estimator_mode(text)};
}

sim::ScenarioScript load_script(const std::string& scenario, const std::string& script) {
  if (!script.empty()) return sim::load_scenario_file(script);
  return sim::builtin_scenario(scenario);
}

std::string default_out_dir() {
  const char* env = std::getenv("DECKCHASE_OUT");
  return env && *env ? env : "out";
}

void print_summary(const batch::BatchResult& result) {
  for (const auto& m : result.modes) {
    fmt::print("{}:\n", usv::to_string(m.mode));
    for (const auto& p : m.prediction) {
      fmt::print("  prediction {:.1f} s: mean {:.3f} m  max {:.3f} m  std {:.3f} m  (n={})\n", p.horizon, p.mean, p.max,
                 p.std_dev, p.n_samples);
    }
    if (m.tracking) {
      fmt::print("  turn tracking: median {:.3f} m, within 0.5 m {:.1f}%, within 1.0 m {:.1f}%\n",
                 m.tracking->median_follow_distance, 100.0 * m.tracking->fraction_within.at(0.5),
                 100.0 * m.tracking->fraction_within.at(1.0));
    }
    if (m.landing) {
      fmt::print("  landing: {} / {} successful ({:.0f}%)\n", m.landing->successes, m.landing->attempts,
                 100.0 * m.landing->success_rate);
    }
    fmt::print("  MPC solve: median {:.2f} ms, p95 {:.2f} ms\n", m.median_solve_ms, m.p95_solve_ms);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving-deck chase and landing simulator"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run scenarios and write logs and reports");
  std::string scenario = "figure8";
  std::string script;
  std::string mode = "both";
  std::string seeds;
  int attempts = 0;
  std::string out_dir = default_out_dir();
  bool no_logs = false;
  Overrides run_over;
  auto* scenario_opt = run->add_option("--scenario", scenario, "Built-in scenario name");
  run->add_option("--script", script, "Scenario JSON file")->check(CLI::ExistingFile)->excludes(scenario_opt);
  run->add_option("--mode", mode, "curvitrack, baseline or both");
  run->add_option("--seeds", seeds, "Seed list, e.g. 1..10 or 1,4,9");
  run->add_option("--attempts", attempts, "Paired landing episodes, one attempt each")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (default $DECKCHASE_OUT or ./out)");
  run->add_flag("--no-logs", no_logs, "Only print the summary");
  add_overrides(run, run_over);

  // replay
  auto* replay = app.add_subcommand("replay", "Score filter predictions on a recorded pose log");
  std::string poses;
  std::string replay_mode = "both";
  double replay_warmup = 10.0;
  std::vector<double> replay_horizons = {1.0, 2.0};
  replay->add_option("--poses", poses, "CSV with header t,x,y,z,eta")->required()->check(CLI::ExistingFile);
  replay->add_option("--mode", replay_mode, "curvitrack, baseline or both");
  replay->add_option("--warmup", replay_warmup, "Seconds skipped before scoring")->check(CLI::NonNegativeNumber);
  replay->add_option("--horizons", replay_horizons, "Prediction horizons, s");

  // serve
  auto* serve = app.add_subcommand("serve", "Interactive session over WebSocket /ws");
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  std::string ui_dir;
  std::uint64_t serve_seed = 1;
  std::string serve_scenario;
  Overrides serve_over;
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--ui", ui_dir, "Directory with the UI bundle")->check(CLI::ExistingDirectory);
  serve->add_option("--seed", serve_seed, "Noise seed");
  serve->add_option("--mode", mode, "curvitrack or baseline");
  serve->add_option("--scenario", serve_scenario, "Scripted scenario instead of operator steering");
  add_overrides(serve, serve_over);

  auto* list = app.add_subcommand("scenarios", "List built-in scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& name : sim::builtin_scenario_names()) {
        const auto s = sim::builtin_scenario(name);
        fmt::print("{:<10} {:6.1f} s\n", name, s.duration);
      }
      return 0;
    }

    if (*run) {
      batch::BatchConfig cfg;
      cfg.script = load_script(scenario, script);
      cfg.modes = parse_modes(mode);
      cfg.stack = stack_from(run_over);
      if (!seeds.empty()) {
        cfg.seeds = batch::parse_seed_list(seeds);
      } else if (attempts > 0) {
        cfg.seeds = batch::parse_seed_list(fmt::format("1..{}", attempts));
      }
      if (attempts > 0) {
        if (!seeds.empty() && static_cast<int>(cfg.seeds.size()) != attempts) {
          throw InvalidArgument(fmt::format("--attempts {} needs {} seeds, got {}", attempts, attempts, cfg.seeds.size()));
        }
        cfg.stack.landing = true;
      }
      cfg.out_dir = out_dir;
      cfg.write_logs = !no_logs;
      cfg.curvilinear_drag = filter_for(usv::EstimatorMode::kCurvilinear, run_over).drag;
      const auto result = batch::run_batch(cfg);
      fmt::print("{} on {} seed(s)\n", cfg.script.name, cfg.seeds.size());
      print_summary(result);
      if (cfg.write_logs) fmt::print("artifacts written to {}\n", cfg.out_dir.string());
      return 0;
    }

    if (*replay) {
      const auto log = usv::read_pose_log_file(poses);
      nlohmann::json doc = nlohmann::json::object();
      for (auto m : parse_modes(replay_mode)) {
        const auto r = batch::replay_poses(log, usv::FilterConfig::for_mode(m), replay_horizons, replay_warmup);
        fmt::print("{} ({} measurements, {} rejected):\n", usv::to_string(m), r.accepted, r.rejected);
        auto& entry = doc[std::string(usv::to_string(m))];
        for (const auto& p : r.reports) {
          fmt::print("  {:.1f} s: mean {:.3f} m  max {:.3f} m  std {:.3f} m  (n={})\n", p.horizon, p.mean, p.max,
                     p.std_dev, p.n_samples);
          entry.push_back(metrics::to_json(p));
        }
      }
      std::cerr << doc.dump() << '\n';
      return 0;
    }

    if (*serve) {
      server::LiveOptions lo;
      lo.script = serve_scenario.empty() ? sim::idle_scenario() : sim::builtin_scenario(serve_scenario);
      lo.config = stack_from(serve_over);
      lo.config.mode = usv::parse_estimator_mode(mode == "both" ? "curvitrack" : mode);
      lo.config.filter = filter_for(lo.config.mode, serve_over);
      lo.seed = serve_seed;
      server::LiveSession live(lo);
      server::WsServer ws(server::ServerOptions{address, port, ui_dir}, live);
      fmt::print("serving on http://{}:{}/ (WebSocket /ws)\n", address, ws.port());
      std::signal(SIGINT, [](int) { g_interrupted = true; });
      std::signal(SIGTERM, [](int) { g_interrupted = true; });
      live.start();
      ws.start_background();
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      ws.stop();
      live.stop();
      return 0;
    }
  } catch (const deckchase::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
