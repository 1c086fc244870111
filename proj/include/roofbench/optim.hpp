#ifndef ROOFBENCH_OPTIM_HPP
#define ROOFBENCH_OPTIM_HPP

#include <Eigen/Dense>

#include <functional>

namespace roofbench::optim {

/// Objective returning f(x) and writing grad f(x) into the second argument.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsOptions {
  int max_iter = 500;
  int history = 8;
  double grad_tol = 1e-10;  // on the infinity norm of the gradient
  double f_tol = 1e-15;     // relative decrease below which we stop
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with a backtracking Armijo line search.
LbfgsResult lbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opt = {});

/// Residual function: writes F(x) and, when the matrix pointer is non-null,
/// the Jacobian dF/dx.
using ResidualFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd*)>;

struct LmOptions {
  int max_iter = 200;
  double residual_tol = 1e-13;  // stop when max |F_i| falls below
  double step_tol = 1e-15;
  double initial_damping = 1e-3;
};

struct LmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  double max_residual = 0.0;
  int iterations = 0;
};

/// Levenberg-Marquardt on ||F(x)||^2, accepting any number of equations.
LmResult levenberg_marquardt(const ResidualFn& F, Eigen::VectorXd x0, const LmOptions& opt = {});

}  // namespace roofbench::optim

#endif  // ROOFBENCH_OPTIM_HPP
