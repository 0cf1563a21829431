#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>

namespace quadrics::factor {

struct LMConfig {
  int max_iters = 100;
  double initial_damping = 1e-4;
  double step_tol = 1e-10;
  double error_tol = 1e-12;
  double max_damping = 1e16;
};

template <typename State>
struct LMResult {
  State state;
  bool converged = false;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double last_step = 0.0;
};

namespace detail {

inline bool solve_damped(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, double mu,
                         Eigen::VectorXd& dx) {
  Eigen::MatrixXd A = H;
  const double floor = 1e-9 * std::max(1.0, H.diagonal().maxCoeff());
  for (Eigen::Index i = 0; i < A.rows(); ++i) A(i, i) += mu * std::max(H(i, i), floor);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) return false;
  dx = ldlt.solve(-g);
  return dx.allFinite();
}

inline bool solve_damped(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& g,
                         double mu, Eigen::VectorXd& dx) {
  Eigen::SparseMatrix<double> A = H;
  Eigen::VectorXd d = H.diagonal();
  const double floor = 1e-9 * std::max(1.0, d.size() ? d.maxCoeff() : 1.0);
  for (Eigen::Index i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += mu * std::max(d(i), floor);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) return false;
  dx = ldlt.solve(-g);
  return dx.allFinite();
}

}  // namespace detail

/// Levenberg-Marquardt on a manifold. `Problem` supplies
///   using State; using Hessian;   (MatrixXd or SparseMatrix<double>)
///   double linearize(const State&, Hessian& H, VectorXd& g) const;  // H = J^T J, g = J^T e
///   double cost(const State&) const;                                // 0.5 |e|^2
///   State retract(const State&, const VectorXd& dx) const;
/// Accepted steps never increase the cost.
template <typename Problem>
LMResult<typename Problem::State> levenberg_marquardt(const Problem& problem,
                                                      typename Problem::State state,
                                                      const LMConfig& config = {}) {
  using State = typename Problem::State;
  typename Problem::Hessian H;
  Eigen::VectorXd g;
  LMResult<State> out;
  double cost = problem.linearize(state, H, g);
  out.initial_cost = cost;
  double mu = config.initial_damping;
  bool fresh = true;

  for (int it = 0; it < config.max_iters; ++it) {
    if (!fresh) cost = problem.linearize(state, H, g);
    fresh = true;
    out.iterations = it + 1;
    if (cost == 0.0 || g.lpNorm<Eigen::Infinity>() == 0.0) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd dx;
    if (!detail::solve_damped(H, g, mu, dx)) {
      mu *= 10.0;
      if (mu > config.max_damping) break;
      continue;
    }
    out.last_step = dx.norm();
    if (out.last_step < config.step_tol) {
      out.converged = true;
      break;
    }
    State candidate = problem.retract(state, dx);
    const double next = problem.cost(candidate);
    if (std::isfinite(next) && next <= cost) {
      const double decrease = cost - next;
      state = std::move(candidate);
      fresh = false;
      mu = std::max(mu * 0.1, 1e-15);
      if (decrease <= config.error_tol * cost) {
        cost = next;
        out.converged = true;
        break;
      }
      cost = next;
    } else {
      mu *= 10.0;
      if (mu > config.max_damping) break;
    }
  }
  out.state = std::move(state);
  out.final_cost = cost;
  return out;
}

}  // namespace quadrics::factor
