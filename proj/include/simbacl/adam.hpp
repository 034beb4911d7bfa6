#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "simbacl/diff.hpp"
#include "simbacl/error.hpp"
#include "simbacl/filter.hpp"
#include "simbacl/rng.hpp"

namespace simbacl {

struct AdamConfig {
  double learning_rate = 0.1;
  int steps = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool restart_on_nonfinite = true;
  double restart_sd = 1.0;  // spread of the random re-initialization
};

struct FitResult {
  std::vector<double> theta_hat;    // full unconstrained vector
  std::vector<double> loss_trace;   // one entry per step
  int restarts = 0;
  std::uint64_t seed = 0;
};

/// Adam on the active coordinates of theta. The objective is called as
/// objective(theta, step) -> (loss, gradient over active coords); a fresh
/// step index lets stochastic objectives re-draw their Monte Carlo samples.
template <typename Objective>
FitResult adam_minimize(Objective&& objective, std::span<const double> theta0,
                        std::span<const std::size_t> active, const AdamConfig& cfg,
                        Rng restart_rng) {
  if (cfg.learning_rate <= 0.0) throw ConfigError("adam: learning rate must be positive");
  if (cfg.steps < 1) throw ConfigError("adam: need at least one step");
  std::vector<std::size_t> all;
  std::span<const std::size_t> act = active;
  if (act.empty()) {
    all = all_coords(theta0.size());
    act = all;
  }
  const std::size_t d = act.size();

  FitResult res;
  res.theta_hat.assign(theta0.begin(), theta0.end());
  res.loss_trace.reserve(cfg.steps);
  std::vector<double> m(d, 0.0), v(d, 0.0);

  for (int step = 0; step < cfg.steps; ++step) {
    double loss;
    std::vector<double> grad;
    bool finite = true;
    try {
      std::tie(loss, grad) = objective(std::span<const double>(res.theta_hat), step);
      if (!std::isfinite(loss)) finite = false;
      for (double g : grad)
        if (!std::isfinite(g)) finite = false;
    } catch (const NumericError&) {
      finite = false;
      loss = std::numeric_limits<double>::infinity();
    }
    if (!finite) {
      if (!cfg.restart_on_nonfinite)
        throw NumericError("adam: non-finite loss at step " + std::to_string(step));
      // re-initialize around theta0 and carry on with fresh moments
      ++res.restarts;
      Rng r = restart_rng.derive("restart", res.restarts, step);
      for (std::size_t j = 0; j < d; ++j)
        res.theta_hat[act[j]] = theta0[act[j]] + cfg.restart_sd * r.normal();
      std::fill(m.begin(), m.end(), 0.0);
      std::fill(v.begin(), v.end(), 0.0);
      res.loss_trace.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    res.loss_trace.push_back(loss);
    for (std::size_t j = 0; j < d; ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
      double m_hat = m[j] / (1.0 - std::pow(cfg.beta1, step + 1));
      double v_hat = v[j] / (1.0 - std::pow(cfg.beta2, step + 1));
      res.theta_hat[act[j]] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
  return res;
}

/// Maximum composite likelihood fit: minimizes the negative composite
/// log-likelihood normalized by N*T, with a fresh simulation seed per step.
template <typename Model>
FitResult adam_fit(const Model& model, std::span<const double> theta0, const ObservationSet& y,
                   const Partition& partition, const SimbaOptions& simba,
                   const AdamConfig& cfg = {}, std::span<const std::size_t> active = {}) {
  const double scale =
      1.0 / (static_cast<double>(model.n_components()) * static_cast<double>(y.horizon));
  auto objective = [&](std::span<const double> th, int step) {
    GradOptions opt;
    opt.simba = simba;
    opt.simba.seed = key_combine(simba.seed, static_cast<std::uint64_t>(step));
    opt.active = active;
    GradientReport rep = grad_composite(model, th, y, partition, opt);
    std::vector<double> g(rep.gradient.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = -scale * rep.gradient[i];
    return std::make_pair(-scale * rep.value, std::move(g));
  };
  FitResult res = adam_minimize(objective, theta0, active, cfg, Rng(simba.seed));
  res.seed = simba.seed;
  return res;
}

}  // namespace simbacl
