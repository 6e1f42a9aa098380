#pragma once

// Evaluation arithmetic over scenario logs: horizon prediction errors,
// turn-gated follow distances and landing outcomes.

#include "deckchase/mission.hpp"
#include "deckchase/scenario_runner.hpp"

#include <json.hpp>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace deckchase::metrics {

struct ErrorStats {
  double mean = 0.0;
  double max = 0.0;
  double std_dev = 0.0;  // population
  std::size_t n = 0;
};

/// Throws EmptySelection on an empty sample set.
ErrorStats summarize(const std::vector<double>& samples);

struct PredictionErrorReport {
  double horizon = 0.0;
  double mean = 0.0;
  double max = 0.0;
  double std_dev = 0.0;
  std::size_t n_samples = 0;
};

/// Planar error of every logged prediction at `horizon_s` against the true
/// USV position at its target tick. Throws InsufficientCoverage when no
/// prediction has ground truth.
std::vector<double> prediction_error_samples(const sim::ScenarioLog& log, double horizon_s);
PredictionErrorReport prediction_errors(const sim::ScenarioLog& log, double horizon_s);
/// Pools the samples of several logs (e.g. one per seed).
PredictionErrorReport prediction_errors(const std::vector<sim::ScenarioLog>& logs, double horizon_s);

struct TrackingReport {
  double bin_width = 0.25;
  std::vector<std::size_t> histogram;  // bin i covers [i w, (i + 1) w)
  double median_follow_distance = 0.0;
  std::map<double, double> fraction_within;  // d -> fraction of ticks with distance <= d
  std::size_t n_samples = 0;

  std::size_t histogram_mass() const;
};

std::vector<double> turn_distances(const sim::ScenarioLog& log, double turn_threshold);
/// Ticks where the true |yaw rate| exceeds the threshold. Throws EmptySelection
/// if there are none.
TrackingReport turn_tracking(const sim::ScenarioLog& log, double turn_threshold = 0.1);
TrackingReport turn_tracking(const std::vector<sim::ScenarioLog>& logs, double turn_threshold = 0.1);
TrackingReport tracking_from_distances(std::vector<double> distances, double bin_width = 0.25,
                                       const std::vector<double>& within = {0.5, 1.0});

double median(std::vector<double> values);

struct LandingReport {
  int attempts = 0;
  int successes = 0;
  int aborts = 0;
  double success_rate = 0.0;
};

/// Throws EmptySelection when there are no attempts.
LandingReport landing_stats(const std::vector<mission::AttemptRecord>& attempts);

nlohmann::json to_json(const PredictionErrorReport& r);
nlohmann::json to_json(const TrackingReport& r);
nlohmann::json to_json(const LandingReport& r);

struct SummaryRow {
  std::string method;
  PredictionErrorReport report;
};

/// Columns: method, horizon_s, mean_m, max_m, std_m, n.
void write_prediction_table(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace deckchase::metrics
