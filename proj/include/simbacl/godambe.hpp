#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "simbacl/adam.hpp"
#include "simbacl/diff.hpp"
#include "simbacl/linalg.hpp"
#include "simbacl/math.hpp"
#include "simbacl/threads.hpp"

namespace simbacl {

enum class GodambeMethod { expected_plain, expected_bartlett, observed_bartlett };

inline std::string to_string(GodambeMethod m) {
  switch (m) {
    case GodambeMethod::expected_plain: return "expected_plain";
    case GodambeMethod::expected_bartlett: return "expected_bartlett";
    case GodambeMethod::observed_bartlett: return "observed_bartlett";
  }
  return "?";
}

struct GodambeMatrices {
  Matrix s, v, g;
  GodambeMethod method = GodambeMethod::expected_bartlett;
  int replicates = 0;
  bool ridged = false;  // V needed a ridge before inversion
};

namespace detail {

inline Matrix outer(std::span<const double> a, std::span<const double> b) {
  Matrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

inline void finish_godambe(GodambeMatrices& gm) {
  gm.s.symmetrize();
  gm.v.symmetrize();
  const std::size_t d = gm.v.rows;
  double floor = 1e-12 * std::max(1.0, gm.v.trace() / d);
  if (min_eigenvalue(gm.v) < floor) {
    double ridge = 1e-8 * gm.v.trace() / d;
    for (std::size_t i = 0; i < d; ++i) gm.v(i, i) += ridge;
    gm.ridged = true;
  }
  gm.g = gm.s * inverse_sym(gm.v) * gm.s;
  gm.g.symmetrize();
}

}  // namespace detail

/// Sandwich matrices from precomputed replicate derivatives; the model-level
/// godambe() below feeds it, and synthetic-gradient checks can call it
/// directly.
///   expected_plain:    gradients (B x d) and hessians (B x d*d)
///   expected_bartlett: per-block gradients (B x K x d)
///   observed_bartlett: per-block gradients of the single observed dataset
inline GodambeMatrices godambe_from_replicates(
    GodambeMethod method, const std::vector<std::vector<double>>& gradients,
    const std::vector<std::vector<double>>& hessians,
    const std::vector<std::vector<std::vector<double>>>& block_gradients, std::size_t d) {
  GodambeMatrices gm;
  gm.method = method;
  gm.s = Matrix(d, d);
  gm.v = Matrix(d, d);

  switch (method) {
    case GodambeMethod::expected_plain: {
      const std::size_t b_total = gradients.size();
      if (b_total < 2) throw ConfigError("godambe: expected methods need at least 2 replicates");
      gm.replicates = static_cast<int>(b_total);
      std::vector<double> mean(d, 0.0);
      for (const auto& g : gradients)
        for (std::size_t i = 0; i < d; ++i) mean[i] += g[i] / b_total;
      for (const auto& g : gradients) {
        std::vector<double> c(d);
        for (std::size_t i = 0; i < d; ++i) c[i] = g[i] - mean[i];
        Matrix o = detail::outer(c, c);
        o *= 1.0 / (b_total - 1);
        gm.v = gm.v + o;
      }
      for (const auto& h : hessians)
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) gm.s(i, j) -= h[i * d + j] / b_total;
      break;
    }
    case GodambeMethod::expected_bartlett: {
      const std::size_t b_total = block_gradients.size();
      if (b_total < 2) throw ConfigError("godambe: expected methods need at least 2 replicates");
      gm.replicates = static_cast<int>(b_total);
      for (const auto& blocks : block_gradients) {
        std::vector<double> total(d, 0.0);
        for (const auto& g : blocks) {
          Matrix o = detail::outer(g, g);
          o *= 1.0 / b_total;
          gm.s = gm.s + o;
          for (std::size_t i = 0; i < d; ++i) total[i] += g[i];
        }
        Matrix o = detail::outer(total, total);
        o *= 1.0 / b_total;
        gm.v = gm.v + o;
      }
      break;
    }
    case GodambeMethod::observed_bartlett: {
      if (block_gradients.size() != 1)
        throw ConfigError("godambe: observed method works on the single observed dataset");
      gm.replicates = 1;
      std::vector<double> total(d, 0.0);
      for (const auto& g : block_gradients[0]) {
        gm.s = gm.s + detail::outer(g, g);
        for (std::size_t i = 0; i < d; ++i) total[i] += g[i];
      }
      gm.v = detail::outer(total, total);
      break;
    }
  }
  detail::finish_godambe(gm);
  return gm;
}

struct GodambeOptions {
  SimbaOptions simba;
  GodambeMethod method = GodambeMethod::expected_bartlett;
  int replicates = 200;                 // simulated datasets for expected methods
  std::span<const std::size_t> active;  // free coordinates
  int threads = 1;
  int horizon = 0;  // data length for simulated replicates; 0 = take from y_observed
};

/// Godambe information at theta_hat. Expected methods simulate `replicates`
/// datasets from the model at theta_hat and average derivative products;
/// the observed method plugs in the observed data instead.
template <typename Model>
GodambeMatrices godambe(const Model& model, std::span<const double> theta_hat,
                        const Partition& partition, const GodambeOptions& opt,
                        const ObservationSet* y_observed = nullptr) {
  std::vector<std::size_t> all;
  std::span<const std::size_t> active = opt.active;
  if (active.empty()) {
    all = all_coords(theta_hat.size());
    active = all;
  }
  const std::size_t d = active.size();

  if (opt.method == GodambeMethod::observed_bartlett) {
    if (!y_observed) throw ConfigError("godambe: observed method requires the observed dataset");
    GradOptions go;
    go.simba = opt.simba;
    go.active = active;
    go.per_block = true;
    GradientReport rep = grad_composite(model, theta_hat, *y_observed, partition, go);
    return godambe_from_replicates(opt.method, {}, {}, {rep.block_gradients}, d);
  }

  const int b_total = opt.replicates;
  if (b_total < 2) throw ConfigError("godambe: expected methods need at least 2 replicates");
  const bool plain = opt.method == GodambeMethod::expected_plain;

  std::vector<std::vector<double>> gradients(plain ? b_total : 0);
  std::vector<std::vector<double>> hessians(plain ? b_total : 0);
  std::vector<std::vector<std::vector<double>>> block_gradients(plain ? 0 : b_total);
  Rng base(opt.simba.seed);
  int horizon = opt.horizon > 0 ? opt.horizon : (y_observed ? y_observed->horizon : 0);
  if (horizon == 0) throw ConfigError("godambe: expected methods need the data horizon");

  parallel_for(b_total, opt.threads, [&](std::size_t b) {
    Rng rep_rng = base.derive("boot", b);
    Trajectory traj = sample_trajectory(model, theta_hat, horizon, rep_rng.derive("x"));
    ObservationSet y = sample_observations(model, theta_hat, traj, rep_rng.derive("y"));
    GradOptions go;
    go.simba = opt.simba;
    go.simba.seed = rep_rng.derive("eval").key();
    go.simba.threads = 1;
    go.active = active;
    if (plain) {
      go.per_block = false;
      GradientReport rep = hessian_composite(model, theta_hat, y, partition, go);
      gradients[b] = std::move(rep.gradient);
      hessians[b] = std::move(rep.hessian);
    } else {
      go.per_block = true;
      GradientReport rep = grad_composite(model, theta_hat, y, partition, go);
      block_gradients[b] = std::move(rep.block_gradients);
    }
  });
  return godambe_from_replicates(opt.method, gradients, hessians, block_gradients, d);
}

// --- confidence sets -------------------------------------------------------

struct ConfidenceEllipsoid {
  std::vector<double> center;  // theta_hat over the active coordinates
  Matrix shape;                // Godambe information
  double level = 0.95;
};

inline bool ellipsoid_contains(const ConfidenceEllipsoid& e, std::span<const double> point) {
  if (point.size() != e.center.size()) throw DataError("ellipsoid_contains: dimension mismatch");
  std::vector<double> diff(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) diff[i] = point[i] - e.center[i];
  double q = quadratic_form(e.shape, diff);
  return q <= chi2_quantile(static_cast<double>(point.size()), e.level);
}

/// Per-coordinate interval half-width from the marginal of the approximating
/// Gaussian: z * sqrt((G^-1)_ii).
inline double marginal_halfwidth(const Matrix& godambe_info, std::size_t coord, double level) {
  Matrix inv = inverse_sym(godambe_info);
  return normal_two_sided_quantile(level) * std::sqrt(inv(coord, coord));
}

// --- coverage experiments ---------------------------------------------------

struct CoverageOutcome {
  bool ok = false;  // rep completed
  bool joint_contains = false;
  std::vector<bool> marginal_contains;
  std::vector<double> theta_hat;  // active coordinates
};

struct CoverageReport {
  int reps_requested = 0;
  int reps_done = 0;
  int failures = 0;
  double joint_coverage = 0.0;
  double joint_se = 0.0;
  std::vector<double> marginal_coverage;
  std::vector<CoverageOutcome> rows;
};

/// Shared coverage loop: run_rep(rep) produces (theta_hat, G) on the active
/// coordinates; containment of truth is recorded jointly and marginally.
/// Failures are counted and excluded, not fatal.
inline CoverageReport coverage_loop(
    int reps, double level, std::span<const double> truth_active,
    const std::function<std::pair<std::vector<double>, Matrix>(int)>& run_rep, int threads = 1) {
  CoverageReport rep;
  rep.reps_requested = reps;
  rep.rows.resize(reps);
  const std::size_t d = truth_active.size();
  parallel_for(reps, threads, [&](std::size_t r) {
    CoverageOutcome& out = rep.rows[r];
    try {
      auto [theta_hat, g] = run_rep(static_cast<int>(r));
      ConfidenceEllipsoid e{theta_hat, g, level};
      out.joint_contains = ellipsoid_contains(e, truth_active);
      out.marginal_contains.resize(d);
      for (std::size_t i = 0; i < d; ++i) {
        double hw = marginal_halfwidth(g, i, level);
        out.marginal_contains[i] = std::fabs(truth_active[i] - theta_hat[i]) <= hw;
      }
      out.theta_hat = std::move(theta_hat);
      out.ok = true;
    } catch (const Error&) {
      out.ok = false;
    }
  });
  rep.marginal_coverage.assign(d, 0.0);
  for (const auto& row : rep.rows) {
    if (!row.ok) {
      ++rep.failures;
      continue;
    }
    ++rep.reps_done;
    rep.joint_coverage += row.joint_contains;
    for (std::size_t i = 0; i < d; ++i) rep.marginal_coverage[i] += row.marginal_contains[i];
  }
  if (rep.reps_done > 0) {
    rep.joint_coverage /= rep.reps_done;
    rep.joint_se =
        std::sqrt(rep.joint_coverage * (1.0 - rep.joint_coverage) / rep.reps_done);
    for (auto& c : rep.marginal_coverage) c /= rep.reps_done;
  }
  return rep;
}

struct CoverageConfig {
  int reps = 50;
  double level = 0.95;
  GodambeMethod method = GodambeMethod::expected_bartlett;
  int horizon = 100;
  SimbaOptions simba;
  AdamConfig adam;
  int godambe_replicates = 200;
  int threads = 1;
};

/// Full-pipeline coverage: per rep, simulate a dataset at theta_star, fit
/// the active coordinates, build the Godambe information, and check
/// containment.
template <typename Model>
CoverageReport coverage_experiment(const Model& model, std::span<const double> theta_star,
                                   std::span<const std::size_t> active,
                                   const CoverageConfig& cfg) {
  std::vector<double> truth_active(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) truth_active[i] = theta_star[active[i]];
  std::vector<double> theta_star_copy(theta_star.begin(), theta_star.end());

  auto run_rep = [&, theta_star_copy](int r) {
    Rng rep_rng = Rng(cfg.simba.seed).derive("rep", r);
    Trajectory traj =
        sample_trajectory(model, theta_star_copy, cfg.horizon, rep_rng.derive("x"));
    ObservationSet y = sample_observations(model, theta_star_copy, traj, rep_rng.derive("y"));
    Partition partition = Partition::singletons(model.n_components(), Model::kStateCard);

    SimbaOptions fit_simba = cfg.simba;
    fit_simba.seed = rep_rng.derive("fit").key();
    fit_simba.threads = 1;
    FitResult fit = adam_fit(model, theta_star_copy, y, partition, fit_simba, cfg.adam, active);

    GodambeOptions go;
    go.simba = cfg.simba;
    go.simba.seed = rep_rng.derive("godambe").key();
    go.simba.threads = 1;
    go.method = cfg.method;
    go.replicates = cfg.godambe_replicates;
    go.active = active;
    GodambeMatrices gm = godambe(model, fit.theta_hat, partition, go, &y);

    std::vector<double> hat_active(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) hat_active[i] = fit.theta_hat[active[i]];
    return std::make_pair(std::move(hat_active), std::move(gm.g));
  };
  return coverage_loop(cfg.reps, cfg.level, truth_active, run_rep, cfg.threads);
}

}  // namespace simbacl
