#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "nsh/graddiff.hpp"
#include "nsh/sinenet.hpp"

namespace testing {

/// Central differences of the network value.
inline nsh::Vec fd_gradient(const nsh::SineNetwork& net, const nsh::Vec& x, double h) {
  nsh::Vec g(x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    nsh::Vec p = x, m = x;
    p[a] += h;
    m[a] -= h;
    g[a] = (nsh::forward_jet(net, p).value - nsh::forward_jet(net, m).value) / (2.0 * h);
  }
  return g;
}

/// Central differences of the analytic gradient, column by column.
inline nsh::Mat fd_hessian(const nsh::SineNetwork& net, const nsh::Vec& x, double h) {
  nsh::Mat H(x.size(), x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    nsh::Vec p = x, m = x;
    p[a] += h;
    m[a] -= h;
    H.col(a) = (nsh::forward_jet(net, p).grad - nsh::forward_jet(net, m).grad) / (2.0 * h);
  }
  return H;
}

/// max |a - b| / max(max |b|, floor): the error relative to the reference's scale.
template <typename A, typename B>
double relative_error(const A& a, const B& b, double floor = 1e-12) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), floor);
}

/// Central difference of a scalar function of the flat parameter vector, coordinate i.
inline double fd_coordinate(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd theta,
                            Eigen::Index i, double h) {
  const double t = theta[i];
  theta[i] = t + h;
  const double up = f(theta);
  theta[i] = t - h;
  const double down = f(theta);
  return (up - down) / (2.0 * h);
}

struct GradientCheck {
  double worst = 0.0;  // max over coordinates of |analytic - fd| / max(abs_tol, rel_tol * |fd|)
  Eigen::Index worst_index = -1;
  double loss = 0.0;
};

/// Compares loss_and_grad against central differences on every parameter. `richardson`
/// combines steps h and h/2 to cancel the h^2 truncation term for high-frequency nets.
inline GradientCheck check_parameter_gradient(const nsh::SineNetwork& net, const nsh::SampleBatch& batch,
                                              const nsh::LossConfig& config, double tau_value, double step,
                                              double rel_tol, double abs_tol, bool richardson = false) {
  const nsh::LossResult r = nsh::loss_and_grad(net, batch, config, tau_value);
  const Eigen::VectorXd analytic = r.grad.flatten();
  const Eigen::VectorXd theta = nsh::flatten_parameters(net);
  auto loss_at = [&](const Eigen::VectorXd& t) {
    nsh::SineNetwork copy = net;
    nsh::unflatten_parameters(copy, t);
    return nsh::total_loss(nsh::evaluate_terms(copy, batch, config), config, tau_value);
  };
  GradientCheck out;
  out.loss = r.total;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    double fd = fd_coordinate(loss_at, theta, i, step);
    if (richardson) fd = (4.0 * fd_coordinate(loss_at, theta, i, step / 2.0) - fd) / 3.0;
    const double ratio = std::abs(analytic[i] - fd) / std::max(abs_tol, rel_tol * std::abs(fd));
    if (ratio > out.worst) {
      out.worst = ratio;
      out.worst_index = i;
    }
  }
  return out;
}

}  // namespace testing
