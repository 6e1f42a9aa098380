#include "deckchase/batch.hpp"

#include "deckchase/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace deckchase::batch {
namespace {

std::uint64_t parse_seed(std::string_view text, std::string_view whole) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw InvalidArgument(fmt::format("invalid seed list '{}': '{}' is not a non-negative integer", whole, text));
  }
  return v;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
  return v[std::min(idx, v.size() - 1)];
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << doc.dump(2) << '\n';
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view part = text.substr(pos, comma - pos);
    const std::size_t dots = part.find("..");
    if (dots == std::string_view::npos) {
      seeds.push_back(parse_seed(part, text));
    } else {
      const auto lo = parse_seed(part.substr(0, dots), text);
      const auto hi = parse_seed(part.substr(dots + 2), text);
      if (hi < lo) throw InvalidArgument(fmt::format("invalid seed range '{}'", part));
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    }
    pos = comma + 1;
  }
  return seeds;
}

std::string log_stem(const sim::ScenarioLog& log) {
  return fmt::format("{}_{}_seed{}", log.scenario, log.mode, log.seed);
}

nlohmann::json to_json(const ModeSummary& s) {
  nlohmann::json doc;
  doc["mode"] = std::string(usv::to_string(s.mode));
  doc["prediction"] = nlohmann::json::array();
  for (const auto& p : s.prediction) doc["prediction"].push_back(metrics::to_json(p));
  if (s.tracking) doc["tracking"] = metrics::to_json(*s.tracking);
  if (s.landing) doc["landing"] = metrics::to_json(*s.landing);
  doc["median_solve_ms"] = s.median_solve_ms;
  doc["p95_solve_ms"] = s.p95_solve_ms;
  return doc;
}

BatchResult run_batch(const BatchConfig& config) {
  if (config.modes.empty()) throw InvalidArgument("batch needs at least one estimator mode");
  if (config.seeds.empty()) throw InvalidArgument("batch needs at least one seed");
  config.script.validate();
  if (config.write_logs) std::filesystem::create_directories(config.out_dir);

  BatchResult result;
  std::vector<metrics::SummaryRow> table;
  for (auto mode : config.modes) {
    sim::StackConfig stack = config.stack;
    stack.mode = mode;
    stack.filter = usv::FilterConfig::for_mode(mode);
    if (mode == usv::EstimatorMode::kCurvilinear && config.curvilinear_drag) stack.filter->drag = *config.curvilinear_drag;
    std::vector<sim::ScenarioLog> logs;
    std::vector<mission::AttemptRecord> attempts;
    std::vector<double> solve_ms;
    for (auto seed : config.seeds) {
      sim::ScenarioLog log = sim::run_scenario(config.script, stack, seed);
      if (config.write_logs) {
        const auto csv = config.out_dir / (log_stem(log) + ".csv");
        const auto events = config.out_dir / (log_stem(log) + "_events.jsonl");
        std::ofstream c(csv);
        std::ofstream e(events);
        if (!c || !e) throw Error(fmt::format("cannot write logs under '{}'", config.out_dir.string()));
        sim::write_log_csv(c, log);
        sim::write_events_jsonl(e, log);
        result.written.push_back(csv);
        result.written.push_back(events);
      }
      attempts.insert(attempts.end(), log.attempts.begin(), log.attempts.end());
      solve_ms.insert(solve_ms.end(), log.diagnostics.solve_ms.begin(), log.diagnostics.solve_ms.end());
      log.diagnostics.solve_ms.clear();
      logs.push_back(std::move(log));
    }

    ModeSummary summary;
    summary.mode = mode;
    for (double h : stack.metric_horizons) {
      try {
        summary.prediction.push_back(metrics::prediction_errors(logs, h));
        table.push_back(metrics::SummaryRow{std::string(usv::to_string(mode)), summary.prediction.back()});
      } catch (const InsufficientCoverage&) {
      }
    }
    try {
      summary.tracking = metrics::turn_tracking(logs, config.turn_threshold);
    } catch (const EmptySelection&) {
    }
    if (!attempts.empty()) summary.landing = metrics::landing_stats(attempts);
    summary.median_solve_ms = percentile(solve_ms, 0.5);
    summary.p95_solve_ms = percentile(solve_ms, 0.95);

    if (config.write_logs) {
      const auto path = config.out_dir / fmt::format("{}_{}_report.json", config.script.name, usv::to_string(mode));
      write_json(path, to_json(summary));
      result.written.push_back(path);
    }
    result.modes.push_back(std::move(summary));
  }

  if (config.write_logs) {
    const auto path = config.out_dir / fmt::format("{}_summary.csv", config.script.name);
    std::ofstream out(path);
    metrics::write_prediction_table(out, table);
    result.written.push_back(path);
    if (result.modes.size() > 1) {
      nlohmann::json cmp;
      cmp["scenario"] = config.script.name;
      cmp["seeds"] = config.seeds;
      cmp["modes"] = nlohmann::json::array();
      for (const auto& m : result.modes) cmp["modes"].push_back(to_json(m));
      const auto cpath = config.out_dir / fmt::format("{}_comparison.json", config.script.name);
      write_json(cpath, cmp);
      result.written.push_back(cpath);
    }
  }
  return result;
}

ReplayResult replay_poses(const std::vector<usv::PoseMeasurement>& poses, const usv::FilterConfig& filter_config,
                          const std::vector<double>& horizons, double warmup, double dt_pred) {
  if (poses.size() < 2) throw InsufficientCoverage("pose replay needs at least two measurements");
  if (!(dt_pred > 0.0)) throw InvalidArgument("prediction step must be positive");
  std::vector<double> gaps;
  for (std::size_t i = 1; i < poses.size(); ++i) gaps.push_back(poses[i].t - poses[i - 1].t);
  const double tol = 0.5 * metrics::median(gaps);

  std::vector<double> times;
  times.reserve(poses.size());
  for (const auto& p : poses) times.push_back(p.t);
  const auto truth_at = [&](double t) -> const usv::PoseMeasurement* {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    const usv::PoseMeasurement* best = nullptr;
    double best_gap = tol;
    for (auto cand : {it, it == times.begin() ? it : std::prev(it)}) {
      if (cand == times.end()) continue;
      const double g = std::abs(*cand - t);
      if (g <= best_gap) {
        best_gap = g;
        best = &poses[static_cast<std::size_t>(cand - times.begin())];
      }
    }
    return best;
  };

  int max_steps = 0;
  for (double h : horizons) max_steps = std::max(max_steps, static_cast<int>(std::lround(h / dt_pred)));

  ReplayResult result;
  std::vector<std::vector<double>> errors(horizons.size());
  usv::UsvFilter filter(filter_config);
  const double t_start = poses.front().t;
  for (const auto& z : poses) {
    if (!filter.process(z)) {
      ++result.rejected;
      continue;
    }
    ++result.accepted;
    if (z.t - t_start < warmup || max_steps == 0) continue;
    const auto horizon = usv::predict_horizon(filter, max_steps, dt_pred);
    for (std::size_t k = 0; k < horizons.size(); ++k) {
      const int n = static_cast<int>(std::lround(horizons[k] / dt_pred));
      const auto* truth = truth_at(horizon.time_of(static_cast<std::size_t>(n - 1)));
      if (!truth) continue;
      const auto& s = horizon.states[static_cast<std::size_t>(n - 1)];
      errors[k].push_back(std::hypot(s.x - truth->x, s.y - truth->y));
    }
  }
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    if (errors[k].empty()) continue;
    const auto st = metrics::summarize(errors[k]);
    result.reports.push_back(metrics::PredictionErrorReport{horizons[k], st.mean, st.max, st.std_dev, st.n});
  }
  if (result.reports.empty()) throw InsufficientCoverage("no replay prediction has a logged pose at its target time");
  return result;
}

}  // namespace deckchase::batch
