#include "deckchase/mpc.hpp"

#include "deckchase/angles.hpp"
#include "deckchase/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace deckchase::mpc {
namespace {

constexpr int kOrder = uav::kOrder;
constexpr int kAxes = uav::kAxes;

bool is_psd(const Eigen::MatrixXd& m) {
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -1e-12;
}

Eigen::Matrix3d axis_penalty(const MpcConfig& config, int axis) {
  return config.s.block<3, 3>(axis * kOrder, axis * kOrder);
}

Eigen::Vector3d axis_slice(const Vec12& v, int axis) { return v.segment<3>(axis * kOrder); }

Eigen::VectorXd axis_inputs(const std::vector<UavInput>& inputs, int axis) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) u[static_cast<Eigen::Index>(i)] = inputs[i][axis];
  return u;
}

}  // namespace

Eigen::Matrix<double, 12, 12> MpcConfig::default_state_penalty() {
  Eigen::Matrix<double, 12, 1> diag;
  for (int a = 0; a < kAxes; ++a) {
    diag.segment<3>(a * kOrder) << 8.0, 4.0, 0.1;
  }
  return diag.asDiagonal();
}

void MpcConfig::validate() const {
  if (mc < 1 || mp < mc) {
    throw InvalidConfig(fmt::format("horizons must satisfy Mp >= Mc >= 1, got Mp={} Mc={}", mp, mc));
  }
  if (!is_psd(s)) throw InvalidConfig("state penalty S must be symmetric PSD");
  if (!is_psd(t)) throw InvalidConfig("input-rate penalty T must be symmetric PSD");
  for (int a = 0; a < kAxes; ++a) {
    for (int b = 0; b < kAxes; ++b) {
      if (a != b && !s.block<3, 3>(a * kOrder, b * kOrder).isZero(0.0)) {
        throw InvalidConfig("state penalty S must not couple different axes");
      }
      if (a != b && t(a, b) != 0.0) throw InvalidConfig("input-rate penalty T must be diagonal");
    }
    if (!(t(a, a) > 0.0)) throw InvalidConfig("input-rate penalty T must be positive on every channel");
  }
  if (!(u_min.array() < u_max.array()).all()) throw InvalidConfig("u_min must be below u_max componentwise");
  if (!(alpha_l >= 0.0)) throw InvalidConfig("alpha_L must be non-negative");
  if (!(solver_tol > 0.0) || max_iters < 1) throw InvalidConfig("solver tolerance and iteration cap must be positive");
  if (command_lookahead < 1 || command_lookahead > mp) {
    throw InvalidConfig(fmt::format("command lookahead must lie in [1, Mp], got {}", command_lookahead));
  }
}

double sigmoid_gate(double z_tilde, double h_d) {
  if (z_tilde >= 0.16) {
    return 1.0 / (1.0 + std::exp(-(z_tilde - h_d) / -0.15));
  }
  return 1.0 / (1.0 + std::exp((z_tilde - 0.1) / -0.01));
}

ReferenceTrajectory build_reference(const usv::PredictionHorizon& horizon, const ReferenceRequest& request) {
  ReferenceTrajectory ref;
  const std::size_t n = horizon.size();
  ref.desired.resize(n, Vec12::Zero());
  ref.zb_dot.resize(n, 0.0);
  const double dt = horizon.dt_pred;

  double psi_prev = request.uav_psi;
  double z_prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < n; ++m) {
    const usv::UsvState& b = horizon.states[m];
    Vec12& x = ref.desired[m];
    const double tau = static_cast<double>(m + 1) * dt;
    ref.zb_dot[m] = b.zdot;

    auto set_axis = [&x](Axis axis, double pos, double vel) {
      x[UavState::index(axis, 0)] = pos;
      x[UavState::index(axis, 1)] = vel;
      x[UavState::index(axis, 2)] = 0.0;
    };

    if (request.mode == ReferenceMode::kSearch) {
      const double s = request.search_elapsed + tau;
      const double r = request.search_initial_radius + request.search_radial_rate * s;
      const double th = request.search_angular_rate * s;
      const double c = std::cos(th);
      const double sn = std::sin(th);
      set_axis(uav::kAxisX, b.x + r * c, b.xdot + request.search_radial_rate * c - r * request.search_angular_rate * sn);
      set_axis(uav::kAxisY, b.y + r * sn, b.ydot + request.search_radial_rate * sn + r * request.search_angular_rate * c);
      set_axis(uav::kAxisZ, request.deck_z_estimate + request.climb_height, 0.0);
      set_axis(uav::kAxisPsi, request.uav_psi, 0.0);
      continue;
    }

    set_axis(uav::kAxisX, b.x, b.xdot);
    set_axis(uav::kAxisY, b.y, b.ydot);
    const double psi = unwrap_near(b.eta, psi_prev);
    psi_prev = psi;
    set_axis(uav::kAxisPsi, psi, b.etadot);

    switch (request.mode) {
      case ReferenceMode::kFollow:
        set_axis(uav::kAxisZ, b.z + request.follow_height, b.zdot);
        break;
      case ReferenceMode::kLand: {
        const double floor = b.z + request.land_floor_offset;
        double z = std::max(floor, request.uav_z - request.descent_rate * tau);
        z = std::min(z, z_prev);
        z_prev = z;
        set_axis(uav::kAxisZ, z, z > floor ? -request.descent_rate : b.zdot);
        break;
      }
      case ReferenceMode::kClimb:
        set_axis(uav::kAxisZ, request.deck_z_estimate + request.climb_height, 0.0);
        break;
      case ReferenceMode::kSearch:
        break;
    }
  }
  return ref;
}

std::vector<double> gate_weights_for(const MpcConfig& config, const UavLtiModel& model, const UavState& x0,
                                     const ReferenceTrajectory& ref, const std::vector<UavInput>& inputs) {
  const auto states = uav::rollout(model, x0, inputs, config.mp);
  std::vector<double> w(states.size());
  for (std::size_t m = 0; m < states.size(); ++m) {
    const double z_tilde = ref.desired[m][UavState::index(uav::kAxisZ, 0)] - states[m].position(uav::kAxisZ);
    w[m] = sigmoid_gate(z_tilde, config.h_d);
  }
  return w;
}

double evaluate_cost(const MpcConfig& config, const UavLtiModel& model, const UavState& x0, const UavInput& u_prev,
                     const ReferenceTrajectory& ref, const std::vector<double>& gate_weights,
                     const std::vector<UavInput>& inputs) {
  if (static_cast<int>(inputs.size()) != config.mc || static_cast<int>(ref.size()) != config.mp ||
      static_cast<int>(gate_weights.size()) != config.mp) {
    throw LengthMismatch("cost evaluation needs Mc inputs and Mp reference steps and gate weights");
  }
  const auto states = uav::rollout(model, x0, inputs, config.mp);
  double cost = 0.0;
  for (int m = 0; m < config.mp; ++m) {
    const Vec12 e = ref.desired[static_cast<std::size_t>(m)] - states[static_cast<std::size_t>(m)].values;
    cost += e.dot(config.s * e);
    const double dv = ref.zb_dot[static_cast<std::size_t>(m)] - states[static_cast<std::size_t>(m)].velocity(uav::kAxisZ);
    cost += config.alpha_l * gate_weights[static_cast<std::size_t>(m)] * dv * dv;
  }
  for (int i = 0; i < config.mc; ++i) {
    const UavInput h = inputs[static_cast<std::size_t>(i)] - (i == 0 ? u_prev : inputs[static_cast<std::size_t>(i - 1)]);
    cost += h.dot(config.t * h);
  }
  return cost;
}

MpcController::MpcController(MpcConfig config, UavLtiModel model) : config_(std::move(config)), model_(model) {
  config_.validate();
  const int mp = config_.mp;
  const int mc = config_.mc;
  const Eigen::Matrix3d& a = model_.axis_transition();
  const Eigen::Vector3d& e = model_.axis_input();

  free_.resize(kOrder * mp, kOrder);
  forced_ = Eigen::MatrixXd::Zero(kOrder * mp, mc);
  Eigen::Matrix3d a_pow = Eigen::Matrix3d::Identity();
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(kOrder, mc);
  for (int m = 0; m < mp; ++m) {
    a_pow = a * a_pow;
    free_.block(kOrder * m, 0, kOrder, kOrder) = a_pow;
    rows = a * rows;
    rows.col(std::min(m, mc - 1)) += e;
    forced_.block(kOrder * m, 0, kOrder, mc) = rows;
  }

  diff_ = Eigen::MatrixXd::Identity(mc, mc);
  for (int i = 1; i < mc; ++i) diff_(i, i - 1) = -1.0;
  const Eigen::MatrixXd diff_gram = diff_.transpose() * diff_;

  BoxQpSettings settings;
  settings.tolerance = config_.solver_tol;
  settings.max_iterations = config_.max_iters;
  for (int ax = 0; ax < kAxes; ++ax) {
    const Eigen::Matrix3d s = axis_penalty(config_, ax);
    Eigen::MatrixXd h = config_.t(ax, ax) * diff_gram;
    for (int m = 0; m < mp; ++m) {
      const auto r = forced_.block(kOrder * m, 0, kOrder, mc);
      h.noalias() += r.transpose() * (s * r);
    }
    base_hessian_[static_cast<std::size_t>(ax)] = h;
    if (ax != uav::kAxisZ || config_.alpha_l == 0.0) {
      cached_qp_[static_cast<std::size_t>(ax)] =
          std::make_unique<BoxQp>(2.0 * h, Eigen::VectorXd::Constant(mc, config_.u_min[ax]),
                                  Eigen::VectorXd::Constant(mc, config_.u_max[ax]), settings);
    }
  }
}

std::array<AxisProblem, uav::kAxes> MpcController::condense(const UavState& x0, const UavInput& u_prev,
                                                             const ReferenceTrajectory& ref,
                                                             const std::vector<double>& gate_weights) const {
  const int mp = config_.mp;
  const int mc = config_.mc;
  if (static_cast<int>(ref.size()) != mp || static_cast<int>(ref.zb_dot.size()) != mp) {
    throw LengthMismatch(fmt::format("reference has {} steps, expected {}", ref.size(), mp));
  }
  if (static_cast<int>(gate_weights.size()) != mp) {
    throw LengthMismatch("gate weights must cover the prediction horizon");
  }
  std::array<AxisProblem, kAxes> out;
  for (int ax = 0; ax < kAxes; ++ax) {
    AxisProblem& p = out[static_cast<std::size_t>(ax)];
    const Eigen::Matrix3d s = axis_penalty(config_, ax);
    const Eigen::Vector3d x0a = axis_slice(x0.values, ax);
    p.h = base_hessian_[static_cast<std::size_t>(ax)];
    p.b = Eigen::VectorXd::Zero(mc);
    p.c = 0.0;
    for (int m = 0; m < mp; ++m) {
      const auto r = forced_.block(kOrder * m, 0, kOrder, mc);
      const Eigen::Vector3d err =
          axis_slice(ref.desired[static_cast<std::size_t>(m)], ax) - free_.block<3, 3>(kOrder * m, 0) * x0a;
      const Eigen::Vector3d s_err = s * err;
      p.b.noalias() -= r.transpose() * s_err;
      p.c += err.dot(s_err);
    }
    const double t = config_.t(ax, ax);
    p.b[0] -= t * u_prev[ax];
    p.c += t * u_prev[ax] * u_prev[ax];

    if (ax == uav::kAxisZ && config_.alpha_l > 0.0) {
      for (int m = 0; m < mp; ++m) {
        const double w = config_.alpha_l * gate_weights[static_cast<std::size_t>(m)];
        if (w == 0.0) continue;
        const auto rv = forced_.row(kOrder * m + 1);
        const double err = ref.zb_dot[static_cast<std::size_t>(m)] - free_.row(kOrder * m + 1).dot(x0a);
        p.h.noalias() += w * rv.transpose() * rv;
        p.b.noalias() -= w * err * rv.transpose();
        p.c += w * err * err;
      }
    }
  }
  return out;
}

Eigen::VectorXd MpcController::gradient(const UavState& x0, const UavInput& u_prev, const ReferenceTrajectory& ref,
                                        const std::vector<double>& gate_weights,
                                        const std::vector<UavInput>& inputs) const {
  const int mc = config_.mc;
  if (static_cast<int>(inputs.size()) != mc) throw LengthMismatch("gradient needs Mc inputs");
  const auto problems = condense(x0, u_prev, ref, gate_weights);
  Eigen::VectorXd g(kAxes * mc);
  for (int ax = 0; ax < kAxes; ++ax) {
    const AxisProblem& p = problems[static_cast<std::size_t>(ax)];
    const Eigen::VectorXd ga = 2.0 * (p.h * axis_inputs(inputs, ax) + p.b);
    for (int i = 0; i < mc; ++i) g[kAxes * i + ax] = ga[i];
  }
  return g;
}

MpcSolution MpcController::solve(const UavState& x0, const UavInput& u_prev, const ReferenceTrajectory& ref,
                                 const std::optional<MpcSolution>& warm) const {
  const int mc = config_.mc;
  if (!x0.finite()) throw InvalidArgument("initial UAV state must be finite");
  if (static_cast<int>(ref.size()) != config_.mp) {
    throw LengthMismatch(fmt::format("reference has {} steps, expected {}", ref.size(), config_.mp));
  }

  std::vector<UavInput> start(static_cast<std::size_t>(mc), UavInput::Zero());
  if (warm && static_cast<int>(warm->inputs.size()) == mc) {
    start = warm->inputs;
  }
  for (auto& u : start) u = u.cwiseMax(config_.u_min).cwiseMin(config_.u_max);

  std::vector<double> gates = config_.alpha_l > 0.0 ? gate_weights_for(config_, model_, x0, ref, start)
                                                     : std::vector<double>(static_cast<std::size_t>(config_.mp), 0.0);
  const auto problems = condense(x0, u_prev, ref, gates);

  BoxQpSettings settings;
  settings.tolerance = config_.solver_tol;
  settings.max_iterations = config_.max_iters;

  MpcSolution sol;
  sol.inputs.assign(static_cast<std::size_t>(mc), UavInput::Zero());
  sol.converged = true;
  for (int ax = 0; ax < kAxes; ++ax) {
    const AxisProblem& p = problems[static_cast<std::size_t>(ax)];
    const Eigen::VectorXd q = 2.0 * p.b;
    const Eigen::VectorXd w = axis_inputs(start, ax);
    BoxQpResult r;
    if (const auto& cached = cached_qp_[static_cast<std::size_t>(ax)]) {
      r = cached->solve(q, w);
    } else {
      BoxQp qp(2.0 * p.h, Eigen::VectorXd::Constant(mc, config_.u_min[ax]),
               Eigen::VectorXd::Constant(mc, config_.u_max[ax]), settings);
      r = qp.solve(q, w);
    }
    for (int i = 0; i < mc; ++i) {
      sol.inputs[static_cast<std::size_t>(i)][ax] = std::clamp(r.x[i], config_.u_min[ax], config_.u_max[ax]);
    }
    sol.kkt_residual = std::max(sol.kkt_residual, r.kkt_residual);
    sol.iterations = std::max(sol.iterations, r.iterations);
    sol.converged = sol.converged && r.converged;
  }

  sol.cost = evaluate_cost(config_, model_, x0, u_prev, ref, gates, sol.inputs);
  if (warm) {
    const double warm_cost = evaluate_cost(config_, model_, x0, u_prev, ref, gates, start);
    if (warm_cost < sol.cost) {
      sol.inputs = start;
      sol.cost = warm_cost;
    }
  }
  sol.predicted_states = uav::rollout(model_, x0, sol.inputs, config_.mp);
  sol.gate_weights = std::move(gates);
  return sol;
}

MpcSolution solve(const MpcConfig& config, const UavLtiModel& model, const UavState& x0, const UavInput& u_prev,
                  const ReferenceTrajectory& ref, const std::optional<MpcSolution>& warm) {
  return MpcController(config, model).solve(x0, u_prev, ref, warm);
}

MpcSolution shift_solution(const MpcSolution& solution, int steps) {
  MpcSolution shifted = solution;
  if (solution.inputs.empty() || steps <= 0) return shifted;
  const std::size_t n = solution.inputs.size();
  for (std::size_t i = 0; i < n; ++i) {
    shifted.inputs[i] = solution.inputs[std::min(i + static_cast<std::size_t>(steps), n - 1)];
  }
  return shifted;
}

ControlCommand extract_command(const MpcSolution& solution, int lookahead, double t) {
  if (solution.predicted_states.empty()) {
    throw InvalidArgument("solution has no predicted states");
  }
  const std::size_t idx =
      std::min(static_cast<std::size_t>(std::max(lookahead, 1) - 1), solution.predicted_states.size() - 1);
  const UavState& x = solution.predicted_states[idx];
  ControlCommand cmd;
  cmd.velocity = Eigen::Vector3d(x.velocity(uav::kAxisX), x.velocity(uav::kAxisY), x.velocity(uav::kAxisZ));
  cmd.heading_rate = x.velocity(uav::kAxisPsi);
  cmd.t = t;
  return cmd;
}

}  // namespace deckchase::mpc
