#include "deckchase/box_qp.hpp"

#include "deckchase/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <vector>

namespace deckchase::mpc {
namespace {

constexpr int kMaxActiveSetSweeps = 25;

Eigen::VectorXd clamp(const Eigen::VectorXd& v, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

double box_kkt_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi, const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = p * x + q;
  return (x - clamp(x - g, lo, hi)).lpNorm<Eigen::Infinity>();
}

BoxQp::BoxQp(Eigen::MatrixXd p, Eigen::VectorXd lo, Eigen::VectorXd hi, BoxQpSettings settings)
    : p_(std::move(p)), lo_(std::move(lo)), hi_(std::move(hi)), settings_(settings) {
  const auto n = p_.rows();
  if (p_.cols() != n || lo_.size() != n || hi_.size() != n) {
    throw LengthMismatch(fmt::format("box QP dimension mismatch: P {}x{}, bounds {} / {}", p_.rows(), p_.cols(),
                                     lo_.size(), hi_.size()));
  }
  if (!(lo_.array() <= hi_.array()).all()) {
    throw InvalidConfig("box QP lower bound exceeds upper bound");
  }
  rho_ = std::max(p_.diagonal().mean(), 1e-8);
  factor_.compute(p_ + rho_ * Eigen::MatrixXd::Identity(n, n));
  if (factor_.info() != Eigen::Success) {
    throw InvalidConfig("box QP Hessian is not positive semidefinite");
  }
}

bool BoxQp::polish(const Eigen::VectorXd& q, const Eigen::VectorXd& guess, Eigen::VectorXd& out) const {
  const auto n = p_.rows();
  // -1 lower, +1 upper, 0 free.
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (guess[i] <= lo_[i]) {
      state[static_cast<std::size_t>(i)] = -1;
    } else if (guess[i] >= hi_[i]) {
      state[static_cast<std::size_t>(i)] = 1;
    }
  }

  // Primal-dual active set iteration: solve on the free set, then move
  // violated free variables onto their bound and release bounds whose
  // multiplier has the wrong sign.
  double best_residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x(n);
  for (int sweep = 0; sweep < kMaxActiveSetSweeps; ++sweep) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int s = state[static_cast<std::size_t>(i)];
      if (s < 0) {
        x[i] = lo_[i];
      } else if (s > 0) {
        x[i] = hi_[i];
      } else {
        free.push_back(i);
      }
    }
    if (!free.empty()) {
      const auto nf = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd pff(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        rhs[a] = -q[free[a]];
        for (Eigen::Index j = 0; j < n; ++j) {
          if (state[static_cast<std::size_t>(j)] != 0) rhs[a] -= p_(free[a], j) * x[j];
        }
        for (Eigen::Index b = 0; b < nf; ++b) pff(a, b) = p_(free[a], free[b]);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(pff);
      if (llt.info() != Eigen::Success) break;
      const Eigen::VectorXd xf = llt.solve(rhs);
      for (Eigen::Index a = 0; a < nf; ++a) x[free[a]] = xf[a];
    }

    const Eigen::VectorXd candidate = clamp(x, lo_, hi_);
    const double r = box_kkt_residual(p_, q, lo_, hi_, candidate);
    if (r < best_residual) {
      best_residual = r;
      out = candidate;
    }

    const Eigen::VectorXd g = p_ * x + q;
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int& s = state[static_cast<std::size_t>(i)];
      int next = s;
      if (s == 0) {
        if (x[i] < lo_[i]) next = -1;
        if (x[i] > hi_[i]) next = 1;
      } else if ((s < 0 && g[i] < 0.0) || (s > 0 && g[i] > 0.0)) {
        next = 0;
      }
      if (next != s) {
        s = next;
        changed = true;
      }
    }
    if (!changed) return true;
  }
  return std::isfinite(best_residual);
}

BoxQpResult BoxQp::solve(const Eigen::VectorXd& q, const Eigen::VectorXd& warm) const {
  const auto n = p_.rows();
  if (q.size() != n || warm.size() != n) {
    throw LengthMismatch("box QP linear term or warm start has the wrong length");
  }
  BoxQpResult best;
  Eigen::VectorXd z = clamp(warm, lo_, hi_);
  // Multiplier estimate from the warm start: nonzero only where the bound is active.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  {
    const Eigen::VectorXd g = p_ * z + q;
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((z[i] <= lo_[i] && g[i] > 0.0) || (z[i] >= hi_[i] && g[i] < 0.0)) y[i] = -g[i];
    }
  }
  best.x = z;
  best.kkt_residual = box_kkt_residual(p_, q, lo_, hi_, z);
  Eigen::VectorXd x(n);
  Eigen::VectorXd polished(n);
  // A shifted warm start usually carries the right active set already.
  if (polish(q, z + y / rho_, polished)) {
    const double rp = box_kkt_residual(p_, q, lo_, hi_, polished);
    if (rp < best.kkt_residual) {
      best.kkt_residual = rp;
      best.x = polished;
    }
  }
  if (best.kkt_residual <= settings_.tolerance) {
    best.converged = true;
    return best;
  }

  for (int k = 1; k <= settings_.max_iterations; ++k) {
    x = factor_.solve(rho_ * z - y - q);
    const Eigen::VectorXd shifted = x + y / rho_;
    z = clamp(shifted, lo_, hi_);
    y += rho_ * (x - z);
    best.iterations = k;

    const double r = box_kkt_residual(p_, q, lo_, hi_, z);
    if (r < best.kkt_residual) {
      best.kkt_residual = r;
      best.x = z;
    }
    if (k % settings_.polish_interval == 0 || r <= settings_.tolerance) {
      if (polish(q, shifted, polished)) {
        const double rp = box_kkt_residual(p_, q, lo_, hi_, polished);
        if (rp < best.kkt_residual) {
          best.kkt_residual = rp;
          best.x = polished;
        }
      }
    }
    if (best.kkt_residual <= settings_.tolerance) {
      // One more exact polish on the final active set keeps unconstrained
      // problems at machine precision.
      if (polish(q, best.x + (y / rho_), polished)) {
        const double rp = box_kkt_residual(p_, q, lo_, hi_, polished);
        if (rp <= best.kkt_residual) {
          best.kkt_residual = rp;
          best.x = polished;
        }
      }
      best.converged = true;
      return best;
    }
  }
  best.converged = best.kkt_residual <= settings_.tolerance;
  return best;
}

}  // namespace deckchase::mpc
