#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "simbacl/math.hpp"
#include "simbacl/model.hpp"
#include "simbacl/partition.hpp"
#include "simbacl/rng.hpp"
#include "simbacl/simulate.hpp"

namespace simbacl {

struct SmcDiagnostics {
  double min_ess = 0.0;
  double mean_ess = 0.0;
  bool failed = false;  // some weight group lost every particle
};

struct SmcResult {
  double loglik = 0.0;
  SmcDiagnostics diag;
};

/// Block auxiliary particle filter. Each component proposes from
/// transition_row * emission (the per-component observation-informed
/// proposal, available because the emission factorizes); weights accumulate
/// the per-component proposal normalizers and are resampled every step,
/// independently within each block of the partition. With the one-block
/// partition this is the plain APF, same draws and same estimate.
template <typename Model>
SmcResult block_apf_loglik(const Model& model, std::span<const double> theta,
                           const ObservationSet& y, int n_particles,
                           const Partition& partition, std::uint64_t seed) {
  if (n_particles < 2) throw ConfigError("apf: need at least two particles");
  const int n = model.n_components();
  constexpr int card = Model::kStateCard;
  const std::size_t n_blocks = partition.n_blocks();
  if (y.n_components != n) throw DataError("apf: observation set does not match the model");

  Rng base(seed);
  std::vector<int> particles(static_cast<std::size_t>(n_particles) * n);
  std::vector<int> next_particles(particles.size());
  double dist[card];
  for (int i = 0; i < n_particles; ++i)
    for (int c = 0; c < n; ++c) {
      model.initial_dist(c, theta, dist);
      Rng r = base.derive("x0", i, c);
      particles[static_cast<std::size_t>(i) * n + c] = r.categorical({dist, card});
    }

  SmcResult res;
  double ess_sum = 0.0;
  int ess_count = 0;
  std::vector<double> logw(static_cast<std::size_t>(n_particles) * n_blocks);
  std::vector<double> w(n_particles), fields;
  std::vector<double> row(card), weighted(card);
  std::vector<int> ancestors(n_particles);
  if constexpr (!Model::kHomogeneousField) fields.resize(n);

  for (int t = 1; t <= y.horizon; ++t) {
    std::fill(logw.begin(), logw.end(), 0.0);
    for (int i = 0; i < n_particles; ++i) {
      std::span<const int> prev(particles.data() + static_cast<std::size_t>(i) * n,
                                static_cast<std::size_t>(n));
      double count_field = 0.0;
      if constexpr (Model::kHomogeneousField)
        count_field = model.field_from_count(count_in_state(prev, n, model.infectious_state()));
      else
        model.fields(theta, prev, fields.data());
      for (std::size_t k = 0; k < n_blocks; ++k) {
        double block_logw = 0.0;
        for (int c : partition.block(k)) {
          if (block_logw == kNegInf) break;
          if constexpr (Model::kHomogeneousField)
            model.row_from_field(c, prev[c], count_field, theta, row.data());
          else
            model.row_from_field(c, prev[c], fields[c], theta, row.data());
          double ev[card];
          emission_or_missing(model, c, y.at(t, c), theta, ev);
          double norm = 0.0;
          for (int x = 0; x < card; ++x) {
            weighted[x] = row[x] * ev[x];
            norm += weighted[x];
          }
          if (norm <= 0.0) {
            block_logw = kNegInf;  // dead particle for this block
            next_particles[static_cast<std::size_t>(i) * n + c] = 0;
            continue;
          }
          Rng r = base.derive("prop", t, i, c);
          next_particles[static_cast<std::size_t>(i) * n + c] =
              r.categorical({weighted.data(), static_cast<std::size_t>(card)});
          block_logw += std::log(norm);
        }
        logw[static_cast<std::size_t>(i) * n_blocks + k] = block_logw;
      }
    }

    // per-block increment, ESS, and resampling
    for (std::size_t k = 0; k < n_blocks; ++k) {
      double max_lw = kNegInf;
      for (int i = 0; i < n_particles; ++i)
        max_lw = std::max(max_lw, logw[static_cast<std::size_t>(i) * n_blocks + k]);
      if (max_lw == kNegInf) {
        res.loglik = kNegInf;
        res.diag.failed = true;
        if (ess_count > 0) res.diag.mean_ess = ess_sum / ess_count;
        return res;
      }
      double sum = 0.0, sum_sq = 0.0;
      for (int i = 0; i < n_particles; ++i) {
        double lw = logw[static_cast<std::size_t>(i) * n_blocks + k];
        w[i] = lw == kNegInf ? 0.0 : std::exp(lw - max_lw);
        sum += w[i];
        sum_sq += w[i] * w[i];
      }
      res.loglik += max_lw + std::log(sum) - std::log(static_cast<double>(n_particles));
      double ess = sum * sum / sum_sq;
      ess_sum += ess;
      ++ess_count;
      res.diag.min_ess = ess_count == 1 ? ess : std::min(res.diag.min_ess, ess);

      Rng r = base.derive("resample", t, k);
      for (int i = 0; i < n_particles; ++i) ancestors[i] = r.categorical(w);
      // recompose: this block's columns come from the block's own ancestors
      for (int i = 0; i < n_particles; ++i)
        for (int c : partition.block(k))
          particles[static_cast<std::size_t>(i) * n + c] =
              next_particles[static_cast<std::size_t>(ancestors[i]) * n + c];
    }
  }
  res.diag.mean_ess = ess_count > 0 ? ess_sum / ess_count : 0.0;
  return res;
}

/// Auxiliary particle filter: the block filter with a single joint block,
/// giving the standard unbiased-in-linear-space estimate.
template <typename Model>
SmcResult apf_loglik(const Model& model, std::span<const double> theta, const ObservationSet& y,
                     int n_particles, std::uint64_t seed) {
  std::vector<int> all(model.n_components());
  for (int i = 0; i < model.n_components(); ++i) all[i] = i;
  Partition joint(model.n_components(), {all}, Model::kStateCard,
                  /*block_space_cap=*/~0ull);
  return block_apf_loglik(model, theta, y, n_particles, joint, seed);
}

}  // namespace simbacl
