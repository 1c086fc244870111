#include "roofbench/optim.hpp"

#include <cmath>
#include <deque>

namespace roofbench::optim {

LbfgsResult lbfgs(const Objective& f, Eigen::VectorXd x, const LbfgsOptions& opt) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n), g_new(n);
  double fx = f(x, g);
  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  LbfgsResult res;
  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    if (!std::isfinite(fx)) break;
    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t i = 0; i < S.size(); ++i) {
      double beta = rho[i] * Y[i].dot(q);
      q += S[i] * (alpha[i] - beta);
    }
    Eigen::VectorXd d = -q;
    double slope = g.dot(d);
    if (!(slope < 0)) {
      S.clear();
      Y.clear();
      rho.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    double t = 1.0;
    if (S.empty()) t = std::min(1.0, 1.0 / std::max(1e-12, g.lpNorm<Eigen::Infinity>()));
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + t * d;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g_new - g;
    double sy = s.dot(y);
    const double decrease = fx - f_new;
    x = std::move(x_new);
    g = g_new;
    const double f_old = fx;
    fx = f_new;
    if (sy > 1e-16 * s.norm() * y.norm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.history) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    if (decrease <= opt.f_tol * std::max(1.0, std::abs(f_old))) {
      res.converged = g.lpNorm<Eigen::Infinity>() <= std::sqrt(opt.grad_tol);
      res.iterations = it + 1;
      break;
    }
    res.iterations = it + 1;
  }
  res.x = std::move(x);
  res.value = fx;
  return res;
}

LmResult levenberg_marquardt(const ResidualFn& F, Eigen::VectorXd x, const LmOptions& opt) {
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  F(x, r, &J);
  double cost = r.squaredNorm();
  double lambda = opt.initial_damping;
  LmResult res;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    if (!std::isfinite(cost)) break;
    if (r.size() == 0 || r.lpNorm<Eigen::Infinity>() <= opt.residual_tol) break;
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd Jtr = J.transpose() * r;
    bool improved = false;
    Eigen::VectorXd step;
    for (int k = 0; k < 40; ++k) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal().array() += lambda * (1.0 + JtJ.diagonal().array());
      step = A.ldlt().solve(-Jtr);
      Eigen::VectorXd x_new = x + step;
      Eigen::VectorXd r_new;
      F(x_new, r_new, nullptr);
      double c_new = r_new.squaredNorm();
      if (std::isfinite(c_new) && c_new < cost) {
        x = std::move(x_new);
        lambda = std::max(lambda / 5.0, 1e-15);
        improved = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e16) break;
    }
    if (!improved) break;
    F(x, r, &J);
    cost = r.squaredNorm();
    if (step.lpNorm<Eigen::Infinity>() <= opt.step_tol * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      ++it;
      break;
    }
  }
  res.x = std::move(x);
  res.residual = r;
  res.max_residual = r.size() ? r.lpNorm<Eigen::Infinity>() : 0.0;
  res.iterations = it;
  return res;
}

}  // namespace roofbench::optim
