#pragma once

// Receding-horizon tracking controller over jerk inputs.
//
// The cost is
//   sum_m  e_m' S e_m + h_m' T h_m  +  alpha_L f(z~_m) (zb_dot_m - z_dot_m)^2
// with e_m the deviation from the desired state, h_m the input increment and
// f the two-branch logistic gate on the vertical tracking error. Inputs are
// free for the first Mc steps and held afterwards. Because the model is
// Kronecker structured and S, T are axis-decoupled, the condensed QP splits
// into one small box-constrained QP per axis.

#include "deckchase/box_qp.hpp"
#include "deckchase/uav_model.hpp"
#include "deckchase/usv_estimator.hpp"

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <optional>
#include <vector>

namespace deckchase::mpc {

using uav::Axis;
using uav::UavInput;
using uav::UavLtiModel;
using uav::UavState;
using uav::Vec12;

struct MpcConfig {
  int mp = 100;
  int mc = 40;
  Eigen::Matrix<double, 12, 12> s = default_state_penalty();
  Eigen::Matrix4d t = 0.05 * Eigen::Matrix4d::Identity();
  double alpha_l = 1200.0;
  double h_d = 1.1;
  UavInput u_min = (UavInput() << -20.0, -20.0, -20.0, -10.0).finished();
  UavInput u_max = (UavInput() << 20.0, 20.0, 20.0, 10.0).finished();
  double solver_tol = 1e-4;
  int max_iters = 400;
  // The velocity command is read this many model steps into the plan.
  int command_lookahead = 10;

  /// Per axis: position 8, velocity 4, acceleration 0.1.
  static Eigen::Matrix<double, 12, 12> default_state_penalty();

  /// Throws InvalidConfig. S must be PSD and block diagonal per axis, T PSD
  /// and diagonal.
  void validate() const;
};

struct ReferenceTrajectory {
  std::vector<Vec12> desired;     // desired UAV state per horizon step
  std::vector<double> zb_dot;     // USV vertical velocity per step, for the touchdown term

  std::size_t size() const { return desired.size(); }
};

enum class ReferenceMode { kFollow, kLand, kClimb, kSearch };

struct ReferenceRequest {
  ReferenceMode mode = ReferenceMode::kFollow;
  double follow_height = 3.0;
  // LAND: z target descends from the current UAV height at this rate until
  // it reaches deck + land_floor_offset.
  double descent_rate = 0.5;
  double land_floor_offset = -0.1;
  // CLIMB / SEARCH altitude above the stored deck estimate.
  double climb_height = 3.0;
  double deck_z_estimate = 0.0;
  // SEARCH: spiral offset around the predicted USV position.
  double search_elapsed = 0.0;
  double search_initial_radius = 1.0;
  double search_radial_rate = 0.5;   // m/s
  double search_angular_rate = 0.6;  // rad/s
  // Current UAV state, used for descent anchoring and heading unwrapping.
  double uav_z = 0.0;
  double uav_psi = 0.0;
};

/// Desired UAV states along the horizon from the predicted USV states.
ReferenceTrajectory build_reference(const usv::PredictionHorizon& horizon, const ReferenceRequest& request);

/// Two-branch logistic gate: about 1 between 0.1 and h_d, about 0 outside.
double sigmoid_gate(double z_tilde, double h_d);

struct ControlCommand {
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // desired world velocity
  double heading_rate = 0.0;
  double t = 0.0;
};

struct MpcSolution {
  std::vector<UavInput> inputs;            // length Mc
  std::vector<UavState> predicted_states;  // length Mp
  std::vector<double> gate_weights;        // frozen f(z~_m) used for this solve
  double cost = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Cost of an input sequence under frozen gate weights, by direct rollout.
double evaluate_cost(const MpcConfig& config, const UavLtiModel& model, const UavState& x0, const UavInput& u_prev,
                     const ReferenceTrajectory& ref, const std::vector<double>& gate_weights,
                     const std::vector<UavInput>& inputs);

/// Gate weights f(z*_m - z_m) along the rollout of `inputs` from x0.
std::vector<double> gate_weights_for(const MpcConfig& config, const UavLtiModel& model, const UavState& x0,
                                     const ReferenceTrajectory& ref, const std::vector<UavInput>& inputs);

/// Condensed form of one axis: J_axis(U) = U' H U + 2 b' U + c.
struct AxisProblem {
  Eigen::MatrixXd h;
  Eigen::VectorXd b;
  double c = 0.0;
};

class MpcController {
 public:
  MpcController(MpcConfig config, UavLtiModel model);

  const MpcConfig& config() const { return config_; }
  const UavLtiModel& model() const { return model_; }

  MpcSolution solve(const UavState& x0, const UavInput& u_prev, const ReferenceTrajectory& ref,
                    const std::optional<MpcSolution>& warm = std::nullopt) const;

  /// Condensed per-axis problems for the given frozen gate weights.
  std::array<AxisProblem, uav::kAxes> condense(const UavState& x0, const UavInput& u_prev,
                                                const ReferenceTrajectory& ref,
                                                const std::vector<double>& gate_weights) const;

  /// Analytic gradient of the total cost with respect to the time-major
  /// stacked inputs (u_1, ..., u_Mc).
  Eigen::VectorXd gradient(const UavState& x0, const UavInput& u_prev, const ReferenceTrajectory& ref,
                           const std::vector<double>& gate_weights, const std::vector<UavInput>& inputs) const;

 private:
  MpcConfig config_;
  UavLtiModel model_;
  // Per-axis prediction matrices: stacked states = free * x0 + forced * U.
  Eigen::MatrixXd free_;    // 3Mp x 3
  Eigen::MatrixXd forced_;  // 3Mp x Mc
  Eigen::MatrixXd diff_;    // Mc x Mc input differencing
  std::array<Eigen::MatrixXd, uav::kAxes> base_hessian_;
  // Cached solvers for axes without the gated term (all but z).
  std::array<std::unique_ptr<BoxQp>, uav::kAxes> cached_qp_;
};

/// Convenience wrapper constructing a controller for a single solve.
MpcSolution solve(const MpcConfig& config, const UavLtiModel& model, const UavState& x0, const UavInput& u_prev,
                  const ReferenceTrajectory& ref, const std::optional<MpcSolution>& warm = std::nullopt);

/// Drops the first `steps` inputs and pads with the last one.
MpcSolution shift_solution(const MpcSolution& solution, int steps);

/// Velocity and heading rate of the planned state `lookahead` steps ahead
/// (1 = the first predicted state).
ControlCommand extract_command(const MpcSolution& solution, int lookahead = 1, double t = 0.0);

}  // namespace deckchase::mpc
