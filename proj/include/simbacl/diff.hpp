#pragma once

#include <functional>
#include <span>
#include <vector>

#include "simbacl/dual.hpp"
#include "simbacl/filter.hpp"
#include "simbacl/params.hpp"

namespace simbacl {

/// Derivatives of the composite log-likelihood over the active coordinates.
/// Trajectories are sampled once from the seed and held fixed, so this is
/// the gradient of the filter given the simulations, with no score term for
/// the discrete sampling itself.
struct GradientReport {
  double value = 0.0;
  std::vector<double> gradient;                        // length = n active
  std::vector<double> hessian;                         // d*d row-major, optional
  std::vector<double> block_values;                    // per block log marginal
  std::vector<std::vector<double>> block_gradients;    // per block, length d
  std::uint64_t seed = 0;
  int n_sims = 0;
  bool has_hessian = false;
};

struct GradOptions {
  SimbaOptions simba;
  std::span<const std::size_t> active;  // empty = every coordinate
  bool per_block = false;               // collect per-block gradients
};

template <typename Model>
GradientReport grad_composite(const Model& model, std::span<const double> theta,
                              const ObservationSet& y, const Partition& partition,
                              const GradOptions& opt) {
  std::vector<std::size_t> all;
  std::span<const std::size_t> active = opt.active;
  if (active.empty()) {
    all = all_coords(theta.size());
    active = all;
  }
  std::vector<DualScalar> th = seed_gradient(theta, active);
  MarginalEstimate<DualScalar> est =
      simba_loglik(model, std::span<const DualScalar>(th), y, partition, opt.simba);
  if (value_of(est.composite) == kNegInf)
    throw NumericError("grad_composite: composite likelihood is zero, gradient undefined");
  GradientReport rep;
  rep.value = value_of(est.composite);
  rep.gradient = gradient_of(est.composite, active.size());
  rep.seed = opt.simba.seed;
  rep.n_sims = opt.simba.n_sims;
  if (opt.per_block) {
    rep.block_values.reserve(est.block_log_marginal.size());
    rep.block_gradients.reserve(est.block_log_marginal.size());
    for (const auto& b : est.block_log_marginal) {
      rep.block_values.push_back(value_of(b));
      rep.block_gradients.push_back(gradient_of(b, active.size()));
    }
  }
  return rep;
}

/// Hessian through second-order duals (exact), or central differences of the
/// gradient at the same seed when `fd_fallback` is set.
template <typename Model>
GradientReport hessian_composite(const Model& model, std::span<const double> theta,
                                 const ObservationSet& y, const Partition& partition,
                                 const GradOptions& opt, bool fd_fallback = false,
                                 double fd_step = 1e-5) {
  std::vector<std::size_t> all;
  std::span<const std::size_t> active = opt.active;
  if (active.empty()) {
    all = all_coords(theta.size());
    active = all;
  }
  const std::size_t d = active.size();

  if (fd_fallback) {
    GradientReport rep = grad_composite(model, theta, y, partition, opt);
    rep.hessian.assign(d * d, 0.0);
    std::vector<double> th(theta.begin(), theta.end());
    GradOptions inner = opt;
    inner.active = active;
    inner.per_block = false;
    for (std::size_t j = 0; j < d; ++j) {
      double save = th[active[j]];
      th[active[j]] = save + fd_step;
      auto plus = grad_composite(model, th, y, partition, inner);
      th[active[j]] = save - fd_step;
      auto minus = grad_composite(model, th, y, partition, inner);
      th[active[j]] = save;
      for (std::size_t i = 0; i < d; ++i)
        rep.hessian[i * d + j] = (plus.gradient[i] - minus.gradient[i]) / (2.0 * fd_step);
    }
    // symmetrize
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) {
        double v = 0.5 * (rep.hessian[i * d + j] + rep.hessian[j * d + i]);
        rep.hessian[i * d + j] = rep.hessian[j * d + i] = v;
      }
    rep.has_hessian = true;
    return rep;
  }

  std::vector<Dual2Scalar> th = seed_hessian(theta, active);
  MarginalEstimate<Dual2Scalar> est =
      simba_loglik(model, std::span<const Dual2Scalar>(th), y, partition, opt.simba);
  if (value_of(est.composite) == kNegInf)
    throw NumericError("hessian_composite: composite likelihood is zero, gradient undefined");
  GradientReport rep;
  rep.value = value_of(est.composite);
  rep.gradient.resize(d);
  for (std::size_t i = 0; i < d; ++i) rep.gradient[i] = value_of(est.composite.partial(i));
  rep.hessian = hessian_of(est.composite, d);
  rep.has_hessian = true;
  rep.seed = opt.simba.seed;
  rep.n_sims = opt.simba.n_sims;
  if (opt.per_block) {
    for (const auto& b : est.block_log_marginal) {
      rep.block_values.push_back(value_of(b));
      std::vector<double> g(d);
      for (std::size_t i = 0; i < d; ++i) g[i] = value_of(b.partial(i));
      rep.block_gradients.push_back(std::move(g));
    }
  }
  return rep;
}

/// Central finite differences of a scalar objective, coordinate-wise.
inline std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> theta, double step,
    std::span<const std::size_t> active_in = {}) {
  if (!(step > 0.0)) throw ConfigError("fd_gradient: step must be positive");
  std::vector<std::size_t> all;
  std::span<const std::size_t> active = active_in;
  if (active.empty()) {
    all = all_coords(theta.size());
    active = all;
  }
  std::vector<double> th(theta.begin(), theta.end());
  std::vector<double> g(active.size());
  for (std::size_t j = 0; j < active.size(); ++j) {
    double save = th[active[j]];
    th[active[j]] = save + step;
    double up = objective(th);
    th[active[j]] = save - step;
    double down = objective(th);
    th[active[j]] = save;
    g[j] = (up - down) / (2.0 * step);
  }
  return g;
}

}  // namespace simbacl
