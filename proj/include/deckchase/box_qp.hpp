#pragma once

#include <Eigen/Dense>

namespace deckchase::mpc {

struct BoxQpSettings {
  double tolerance = 1e-4;  // on the projected-gradient residual
  int max_iterations = 400;
  int polish_interval = 10;
};

struct BoxQpResult {
  Eigen::VectorXd x;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// KKT residual of a box QP: || x - clamp(x - (P x + q)) ||_inf.
double box_kkt_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi, const Eigen::VectorXd& x);

/// minimize 0.5 x'Px + q'x subject to lo <= x <= hi, P positive definite.
///
/// ADMM on the splitting x = z with z restricted to the box; the x-update
/// uses a cached Cholesky factor of P + rho I. Every few iterations the
/// active set implied by the current iterate is polished with an exact
/// reduced solve, which terminates the method once the active set is right.
/// Returned iterates always lie inside the box.
class BoxQp {
 public:
  BoxQp(Eigen::MatrixXd p, Eigen::VectorXd lo, Eigen::VectorXd hi, BoxQpSettings settings = {});

  BoxQpResult solve(const Eigen::VectorXd& q, const Eigen::VectorXd& warm) const;

  const Eigen::MatrixXd& hessian() const { return p_; }
  const Eigen::VectorXd& lower() const { return lo_; }
  const Eigen::VectorXd& upper() const { return hi_; }

 private:
  bool polish(const Eigen::VectorXd& q, const Eigen::VectorXd& guess, Eigen::VectorXd& out) const;

  Eigen::MatrixXd p_;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  BoxQpSettings settings_;
  double rho_ = 1.0;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

}  // namespace deckchase::mpc
