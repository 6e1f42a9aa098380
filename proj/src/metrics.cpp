#include "deckchase/metrics.hpp"

#include "deckchase/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace deckchase::metrics {
namespace {

PredictionErrorReport report_from(double horizon, const std::vector<double>& samples) {
  if (samples.empty()) {
    throw InsufficientCoverage(fmt::format("no prediction at {} s has ground truth in the log", horizon));
  }
  const ErrorStats s = summarize(samples);
  return PredictionErrorReport{horizon, s.mean, s.max, s.std_dev, s.n};
}

}  // namespace

ErrorStats summarize(const std::vector<double>& samples) {
  if (samples.empty()) throw EmptySelection("cannot summarize an empty sample set");
  ErrorStats s;
  s.n = samples.size();
  // Sorting makes the sums independent of sample order.
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.n);
  s.max = sorted.back();
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(ss / static_cast<double>(s.n));
  return s;
}

std::vector<double> prediction_error_samples(const sim::ScenarioLog& log, double horizon_s) {
  std::unordered_map<std::int64_t, const sim::LogRow*> by_tick;
  by_tick.reserve(log.rows.size());
  for (const auto& r : log.rows) by_tick.emplace(r.tick, &r);

  std::vector<double> errors;
  for (const auto& p : log.predictions) {
    if (std::abs(p.horizon_s - horizon_s) > 1e-9) continue;
    const auto it = by_tick.find(p.target_tick);
    if (it == by_tick.end()) continue;
    errors.push_back(std::hypot(p.x - it->second->usv.x, p.y - it->second->usv.y));
  }
  return errors;
}

PredictionErrorReport prediction_errors(const sim::ScenarioLog& log, double horizon_s) {
  return report_from(horizon_s, prediction_error_samples(log, horizon_s));
}

PredictionErrorReport prediction_errors(const std::vector<sim::ScenarioLog>& logs, double horizon_s) {
  std::vector<double> all;
  for (const auto& log : logs) {
    const auto e = prediction_error_samples(log, horizon_s);
    all.insert(all.end(), e.begin(), e.end());
  }
  return report_from(horizon_s, all);
}

std::size_t TrackingReport::histogram_mass() const {
  return std::accumulate(histogram.begin(), histogram.end(), std::size_t{0});
}

double median(std::vector<double> values) {
  if (values.empty()) throw EmptySelection("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> turn_distances(const sim::ScenarioLog& log, double turn_threshold) {
  std::vector<double> d;
  for (const auto& r : log.rows) {
    if (std::abs(r.usv.etadot) > turn_threshold) d.push_back(std::hypot(r.uav_x - r.usv.x, r.uav_y - r.usv.y));
  }
  return d;
}

TrackingReport tracking_from_distances(std::vector<double> distances, double bin_width,
                                       const std::vector<double>& within) {
  if (distances.empty()) throw EmptySelection("no turning ticks in the selection");
  if (!(bin_width > 0.0)) throw InvalidArgument("histogram bin width must be positive");
  TrackingReport r;
  r.bin_width = bin_width;
  r.n_samples = distances.size();
  for (double d : distances) {
    const auto bin = static_cast<std::size_t>(std::floor(d / bin_width));
    if (bin >= r.histogram.size()) r.histogram.resize(bin + 1, 0);
    ++r.histogram[bin];
  }
  for (double w : within) {
    const auto count = std::count_if(distances.begin(), distances.end(), [w](double d) { return d <= w; });
    r.fraction_within[w] = static_cast<double>(count) / static_cast<double>(distances.size());
  }
  r.median_follow_distance = median(std::move(distances));
  return r;
}

TrackingReport turn_tracking(const sim::ScenarioLog& log, double turn_threshold) {
  return tracking_from_distances(turn_distances(log, turn_threshold));
}

TrackingReport turn_tracking(const std::vector<sim::ScenarioLog>& logs, double turn_threshold) {
  std::vector<double> all;
  for (const auto& log : logs) {
    const auto d = turn_distances(log, turn_threshold);
    all.insert(all.end(), d.begin(), d.end());
  }
  return tracking_from_distances(std::move(all));
}

LandingReport landing_stats(const std::vector<mission::AttemptRecord>& attempts) {
  if (attempts.empty()) throw EmptySelection("landing statistics need at least one attempt");
  LandingReport r;
  r.attempts = static_cast<int>(attempts.size());
  r.successes = static_cast<int>(std::count_if(attempts.begin(), attempts.end(), [](const auto& a) { return a.success(); }));
  r.aborts = r.attempts - r.successes;
  r.success_rate = static_cast<double>(r.successes) / r.attempts;
  return r;
}

nlohmann::json to_json(const PredictionErrorReport& r) {
  return {{"horizon", r.horizon}, {"mean", r.mean}, {"max", r.max}, {"std_dev", r.std_dev}, {"n_samples", r.n_samples}};
}

nlohmann::json to_json(const TrackingReport& r) {
  nlohmann::json within = nlohmann::json::object();
  for (const auto& [d, f] : r.fraction_within) within[fmt::format("{:g}", d)] = f;
  return {{"bin_width", r.bin_width},
          {"histogram", r.histogram},
          {"median_follow_distance", r.median_follow_distance},
          {"fraction_within", within},
          {"n_samples", r.n_samples}};
}

nlohmann::json to_json(const LandingReport& r) {
  return {{"attempts", r.attempts}, {"successes", r.successes}, {"aborts", r.aborts}, {"success_rate", r.success_rate}};
}

void write_prediction_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "method,horizon_s,mean_m,max_m,std_m,n\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out << fmt::format("{},{:.1f},{:.4f},{:.4f},{:.4f},{}\n", row.method, r.horizon, r.mean, r.max, r.std_dev,
                       r.n_samples);
  }
}

}  // namespace deckchase::metrics
