#include "deckchase/batch.hpp"
#include "deckchase/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace deckchase;
using namespace deckchase::batch;

TEST(SeedList, Forms) {
  EXPECT_EQ(parse_seed_list("7"), (std::vector<std::uint64_t>{7}));
  EXPECT_EQ(parse_seed_list("1..4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(parse_seed_list("1..3,8"), (std::vector<std::uint64_t>{1, 2, 3, 8}));
  EXPECT_THROW(parse_seed_list(""), InvalidArgument);
  EXPECT_THROW(parse_seed_list("5..2"), InvalidArgument);
  EXPECT_THROW(parse_seed_list("a"), InvalidArgument);
  EXPECT_THROW(parse_seed_list("1,,2"), InvalidArgument);
}

TEST(Batch, WritesArtifacts) {
  const auto dir = std::filesystem::temp_directory_path() / "deckchase_batch_test";
  std::filesystem::remove_all(dir);
  BatchConfig c;
  c.script = sim::straight_scenario(3.0, 8.0);
  c.seeds = {1, 2};
  c.stack.warmup = 2.0;
  c.out_dir = dir;
  const auto r = run_batch(c);
  ASSERT_EQ(r.modes.size(), 2u);
  EXPECT_EQ(r.modes[0].prediction.size(), 2u);
  EXPECT_FALSE(r.modes[0].tracking.has_value());  // no turning on a straight line
  for (const char* name : {"straight_curvitrack_seed1.csv", "straight_baseline_seed2_events.jsonl",
                           "straight_curvitrack_report.json", "straight_summary.csv", "straight_comparison.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  std::ifstream summary(dir / "straight_summary.csv");
  std::string header;
  std::getline(summary, header);
  EXPECT_EQ(header, "method,horizon_s,mean_m,max_m,std_m,n");
  std::filesystem::remove_all(dir);
}

TEST(Replay, StraightLogPredictsWell) {
  std::vector<usv::PoseMeasurement> poses;
  for (int k = 0; k < 600; ++k) {
    const double t = k / 30.0;
    poses.push_back({t, 2.0 * t, -t, 0.0, std::atan2(-1.0, 2.0)});
  }
  poses.push_back({5.0, 0.0, 0.0, 0.0, 0.0});  // out of order
  const auto r = replay_poses(poses, usv::FilterConfig::for_mode(usv::EstimatorMode::kStraightLine), {1.0, 2.0}, 5.0);
  EXPECT_EQ(r.rejected, 1u);
  EXPECT_EQ(r.accepted, 600u);
  ASSERT_EQ(r.reports.size(), 2u);
  EXPECT_LT(r.reports[0].mean, 0.01);
  EXPECT_LT(r.reports[1].mean, 0.02);
  EXPECT_THROW(replay_poses({}, usv::FilterConfig{}, {1.0}, 0.0), InsufficientCoverage);
}
