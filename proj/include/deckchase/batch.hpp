#pragma once

// Batch execution behind `deckchase run`: paired estimator runs over a seed
// list, with logs, reports and a comparison table written to disk.

#include "deckchase/metrics.hpp"
#include "deckchase/scenario_runner.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deckchase::batch {

/// Accepts "7", "1..10" and comma lists of either ("1..3,8").
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

struct BatchConfig {
  sim::ScenarioScript script;
  std::vector<usv::EstimatorMode> modes = {usv::EstimatorMode::kCurvilinear, usv::EstimatorMode::kStraightLine};
  std::vector<std::uint64_t> seeds = {1};
  sim::StackConfig stack;  // `mode` and `filter` are set per run
  std::optional<usv::DragParams> curvilinear_drag;  // replaces the default drag model
  std::filesystem::path out_dir = "out";
  bool write_logs = true;
  double turn_threshold = 0.1;
};

struct ModeSummary {
  usv::EstimatorMode mode = usv::EstimatorMode::kCurvilinear;
  std::vector<metrics::PredictionErrorReport> prediction;  // one per metric horizon with coverage
  std::optional<metrics::TrackingReport> tracking;
  std::optional<metrics::LandingReport> landing;
  double median_solve_ms = 0.0;
  double p95_solve_ms = 0.0;
};

struct BatchResult {
  std::vector<ModeSummary> modes;
  std::vector<std::filesystem::path> written;
};

std::string log_stem(const sim::ScenarioLog& log);

/// Runs every mode on every seed.
BatchResult run_batch(const BatchConfig& config);

nlohmann::json to_json(const ModeSummary& summary);

struct ReplayResult {
  std::vector<metrics::PredictionErrorReport> reports;  // horizons with coverage only
  std::size_t accepted = 0;
  std::size_t rejected = 0;  // out-of-order measurements
};

/// Runs the filter over a recorded pose log. After `warmup` seconds, every
/// measurement anchors a prediction that is scored against the logged pose
/// nearest to the target time (within half the typical sample gap).
ReplayResult replay_poses(const std::vector<usv::PoseMeasurement>& poses, const usv::FilterConfig& filter,
                          const std::vector<double>& horizons, double warmup, double dt_pred = 0.01);

}  // namespace deckchase::batch
