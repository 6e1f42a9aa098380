#include "deckchase/mission.hpp"

#include "deckchase/errors.hpp"

#include <cmath>

namespace deckchase::mission {
namespace {

// Tick times are products of integers and the step, so equal durations can
// differ in the last bits.
constexpr double kTimeEpsilon = 1e-9;

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kFollow:
      return "FOLLOW";
    case Phase::kLand:
      return "LAND";
    case Phase::kTouchdown:
      return "TOUCHDOWN";
    case Phase::kAbortClimb:
      return "ABORT_CLIMB";
    case Phase::kSearch:
      return "SEARCH";
  }
  return "UNKNOWN";
}

void LandingCriteria::validate() const {
  if (!(radius > 0.0) || !(altitude_band > 0.0) || !(visibility_timeout > 0.0)) {
    throw InvalidConfig("landing criteria must all be positive");
  }
}

void MissionConfig::validate() const {
  criteria.validate();
  if (!(climb_height > 0.0) || !(climb_reached_tolerance > 0.0) || !(land_timeout > 0.0)) {
    throw InvalidConfig("mission climb height, tolerance and land timeout must be positive");
  }
}

double RelativePose::horizontal() const { return std::hypot(dx, dy); }

bool success_test(const RelativePose& rel, const LandingCriteria& criteria) {
  return rel.horizontal() <= criteria.radius && std::abs(rel.dz) <= criteria.altitude_band;
}

mpc::ReferenceMode reference_mode_for(Phase phase) {
  switch (phase) {
    case Phase::kLand:
    case Phase::kTouchdown:
      return mpc::ReferenceMode::kLand;
    case Phase::kAbortClimb:
      return mpc::ReferenceMode::kClimb;
    case Phase::kSearch:
      return mpc::ReferenceMode::kSearch;
    case Phase::kFollow:
      return mpc::ReferenceMode::kFollow;
  }
  return mpc::ReferenceMode::kFollow;
}

MissionSupervisor::MissionSupervisor(MissionConfig config, double t0) : config_(config) {
  config_.validate();
  phase_ = MissionPhase{Phase::kFollow, t0};
}

void MissionSupervisor::transition(Phase to, double t) {
  events_.push_back(PhaseEvent{t, phase_.phase, to});
  phase_ = MissionPhase{to, t};
}

void MissionSupervisor::close_attempt(double t, std::string outcome, std::string reason, double offset) {
  AttemptRecord& a = attempts_.back();
  a.t_outcome = t;
  a.outcome = std::move(outcome);
  a.reason = std::move(reason);
  a.final_offset = offset;
}

MissionUpdate MissionSupervisor::update(const Observables& obs) {
  const double offset = obs.relative.horizontal();
  switch (phase_.phase) {
    case Phase::kFollow:
      if (obs.trigger) {
        attempts_.push_back(AttemptRecord{obs.t, std::nullopt, "", "", 0.0});
        transition(Phase::kLand, obs.t);
      }
      break;
    case Phase::kLand:
      if (success_test(obs.relative, config_.criteria)) {
        close_attempt(obs.t, "touchdown", "", offset);
        transition(Phase::kTouchdown, obs.t);
      } else if (!obs.marker_visible &&
                 obs.t - obs.last_seen_t > config_.criteria.visibility_timeout + kTimeEpsilon) {
        close_attempt(obs.t, "abort", "visibility", offset);
        climb_deck_z_ = obs.deck_z_estimate;
        transition(Phase::kAbortClimb, obs.t);
      } else if (obs.t - phase_.entered_at > config_.land_timeout + kTimeEpsilon) {
        close_attempt(obs.t, "abort", "timeout", offset);
        climb_deck_z_ = obs.deck_z_estimate;
        transition(Phase::kAbortClimb, obs.t);
      }
      break;
    case Phase::kAbortClimb:
      if (obs.uav_z >= climb_deck_z_ + config_.climb_height - config_.climb_reached_tolerance) {
        transition(Phase::kSearch, obs.t);
      }
      break;
    case Phase::kSearch:
      if (obs.marker_visible) {
        transition(Phase::kFollow, obs.t);
      }
      break;
    case Phase::kTouchdown:
      break;
  }
  return MissionUpdate{phase_, reference_mode_for(phase_.phase), climb_deck_z_};
}

void MissionSupervisor::finalize(double t, double horizontal_offset) {
  if (!attempts_.empty() && !attempts_.back().t_outcome) {
    close_attempt(t, "abort", "scenario_end", horizontal_offset);
  }
}

}  // namespace deckchase::mission
