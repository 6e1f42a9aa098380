#pragma once

// Landing supervisor: follow, land on trigger, touch down or abort on lost
// marker, climb, search, reacquire.

#include "deckchase/mpc.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deckchase::mission {

enum class Phase { kFollow, kLand, kTouchdown, kAbortClimb, kSearch };

std::string_view to_string(Phase phase);

struct MissionPhase {
  Phase phase = Phase::kFollow;
  double entered_at = 0.0;
};

struct LandingCriteria {
  double radius = 1.0;              // m, horizontal distance from deck centre
  double altitude_band = 0.15;      // m, vertical gap to the deck
  double visibility_timeout = 0.5;  // s of continuous marker loss before abort

  void validate() const;
};

/// UAV position relative to the deck centre.
struct RelativePose {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;

  double horizontal() const;
};

/// Inclusive thresholds on both horizontal distance and vertical gap.
bool success_test(const RelativePose& rel, const LandingCriteria& criteria);

struct MissionConfig {
  LandingCriteria criteria;
  double climb_height = 3.0;             // above the last deck estimate
  double climb_reached_tolerance = 0.3;  // m
  double land_timeout = 30.0;            // s in LAND without an outcome counts as abort

  void validate() const;
};

struct Observables {
  double t = 0.0;
  RelativePose relative;         // ground truth, used only for the touchdown judgement
  bool marker_visible = false;
  double last_seen_t = 0.0;      // most recent time the marker was visible
  bool trigger = false;          // landing requested on this tick
  double uav_z = 0.0;
  double deck_z_estimate = 0.0;  // from the estimator
};

struct AttemptRecord {
  double t_trigger = 0.0;
  std::optional<double> t_outcome;
  std::string outcome;  // "touchdown" or "abort"; empty while open
  std::string reason;   // abort reason: "visibility", "timeout", "scenario_end"
  double final_offset = 0.0;  // horizontal distance at the outcome

  bool success() const { return outcome == "touchdown"; }
};

struct PhaseEvent {
  double t = 0.0;
  Phase from = Phase::kFollow;
  Phase to = Phase::kFollow;
};

struct MissionUpdate {
  MissionPhase phase;
  mpc::ReferenceMode reference_mode = mpc::ReferenceMode::kFollow;
  double climb_deck_z = 0.0;  // deck estimate frozen at the abort
};

mpc::ReferenceMode reference_mode_for(Phase phase);

class MissionSupervisor {
 public:
  explicit MissionSupervisor(MissionConfig config = {}, double t0 = 0.0);

  MissionUpdate update(const Observables& obs);

  /// Closes an attempt still open at the end of a run as an abort.
  void finalize(double t, double horizontal_offset);

  const MissionPhase& phase() const { return phase_; }
  const std::vector<AttemptRecord>& attempts() const { return attempts_; }
  const std::vector<PhaseEvent>& events() const { return events_; }
  const MissionConfig& config() const { return config_; }
  double climb_deck_z() const { return climb_deck_z_; }

 private:
  void transition(Phase to, double t);
  void close_attempt(double t, std::string outcome, std::string reason, double offset);

  MissionConfig config_;
  MissionPhase phase_;
  std::vector<AttemptRecord> attempts_;
  std::vector<PhaseEvent> events_;
  double climb_deck_z_ = 0.0;
};

}  // namespace deckchase::mission
