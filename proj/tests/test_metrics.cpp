#include "deckchase/errors.hpp"
#include "deckchase/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace deckchase;
using namespace deckchase::metrics;

namespace {

// Straight-line truth with predictions displaced by a fixed offset.
sim::ScenarioLog offset_log(double offset) {
  sim::ScenarioLog log;
  for (std::int64_t k = 0; k < 400; ++k) {
    sim::LogRow r;
    r.tick = k;
    r.t = 0.01 * static_cast<double>(k);
    r.usv.x = 3.0 * r.t;
    r.usv.y = 1.0;
    log.rows.push_back(r);
  }
  for (std::int64_t k = 0; k < 400; k += 5) {
    for (double h : {1.0, 2.0}) {
      const std::int64_t target = k + static_cast<std::int64_t>(h * 100);
      log.predictions.push_back({k, target, h, 0.03 * static_cast<double>(target), 1.0 + offset});
    }
  }
  return log;
}

mission::AttemptRecord attempt(bool ok) {
  mission::AttemptRecord a;
  a.t_outcome = 1.0;
  a.outcome = ok ? "touchdown" : "abort";
  return a;
}

}  // namespace

TEST(Summarize, KnownValues) {
  const auto s = summarize({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.max, 3.0);
  EXPECT_NEAR(s.std_dev, 0.8165, 1e-4);
  EXPECT_EQ(s.n, 3u);
  EXPECT_THROW(summarize({}), EmptySelection);
}

TEST(Summarize, PermutationInvariant) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::vector<double> v(1000);
  for (auto& x : v) x = u(rng);
  const auto a = summarize(v);
  std::shuffle(v.begin(), v.end(), rng);
  const auto b = summarize(v);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_dev, b.std_dev);
  EXPECT_EQ(a.max, b.max);
}

TEST(PredictionErrors, ConstantOffset) {
  const auto log = offset_log(0.4);
  const auto r1 = prediction_errors(log, 1.0);
  EXPECT_NEAR(r1.mean, 0.4, 1e-12);
  EXPECT_NEAR(r1.max, 0.4, 1e-12);
  EXPECT_NEAR(r1.std_dev, 0.0, 1e-12);
  EXPECT_EQ(r1.n_samples, 60u);  // targets beyond the log are skipped
  EXPECT_EQ(prediction_errors(log, 2.0).n_samples, 40u);
  EXPECT_THROW(prediction_errors(log, 5.0), InsufficientCoverage);
  const auto pooled = prediction_errors(std::vector<sim::ScenarioLog>{log, offset_log(0.2)}, 1.0);
  EXPECT_NEAR(pooled.mean, 0.3, 1e-12);
  EXPECT_EQ(pooled.n_samples, 120u);
}

TEST(Tracking, HistogramMedianAndFractions) {
  const auto r = tracking_from_distances({0.1, 0.3, 0.6, 0.2, 1.4});
  EXPECT_EQ(r.n_samples, 5u);
  EXPECT_EQ(r.histogram_mass(), 5u);
  ASSERT_EQ(r.histogram.size(), 6u);
  EXPECT_EQ(r.histogram[0], 2u);
  EXPECT_EQ(r.histogram[1], 1u);
  EXPECT_EQ(r.histogram[2], 1u);
  EXPECT_EQ(r.histogram[5], 1u);
  EXPECT_DOUBLE_EQ(r.median_follow_distance, 0.3);
  EXPECT_DOUBLE_EQ(r.fraction_within.at(0.5), 0.6);
  EXPECT_DOUBLE_EQ(r.fraction_within.at(1.0), 0.8);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_THROW(tracking_from_distances({}), EmptySelection);
  EXPECT_THROW(median({}), EmptySelection);
}

TEST(Tracking, OnlyTurningTicksCount) {
  sim::ScenarioLog log;
  for (int k = 0; k < 10; ++k) {
    sim::LogRow r;
    r.tick = k;
    r.usv.etadot = k < 4 ? 0.5 : 0.05;
    r.uav_x = 0.5;
    log.rows.push_back(r);
  }
  const auto d = turn_distances(log, 0.1);
  EXPECT_EQ(d.size(), 4u);
  EXPECT_EQ(turn_tracking(log).n_samples, 4u);
  EXPECT_THROW(turn_tracking(log, 1.0), EmptySelection);
}

TEST(Landing, SuccessRates) {
  std::vector<mission::AttemptRecord> a;
  for (int i = 0; i < 50; ++i) a.push_back(attempt(i < 25));
  EXPECT_DOUBLE_EQ(landing_stats(a).success_rate, 0.5);
  a.clear();
  for (int i = 0; i < 50; ++i) a.push_back(attempt(i < 18));
  const auto r = landing_stats(a);
  EXPECT_DOUBLE_EQ(r.success_rate, 0.36);
  EXPECT_EQ(r.aborts, 32);
  EXPECT_THROW(landing_stats({}), EmptySelection);
}

TEST(Output, JsonAndTable) {
  const PredictionErrorReport p{1.0, 0.2, 0.5, 0.1, 10};
  const auto j = to_json(p);
  EXPECT_EQ(j.at("n_samples"), 10);
  EXPECT_EQ(j.at("mean"), 0.2);
  const auto t = to_json(tracking_from_distances({0.2, 0.7}));
  EXPECT_EQ(t.at("fraction_within").at("0.5"), 0.5);
  std::ostringstream out;
  write_prediction_table(out, {{"curvitrack", p}});
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "method,horizon_s,mean_m,max_m,std_m,n");
  EXPECT_EQ(row.rfind("curvitrack,1", 0), 0u);
}
