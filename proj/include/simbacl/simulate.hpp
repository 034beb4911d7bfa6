#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "simbacl/model.hpp"
#include "simbacl/rng.hpp"

namespace simbacl {

/// Latent path x_0..x_T, stored (T+1) x N row-major.
struct Trajectory {
  int n_components = 0;
  int horizon = 0;  // T
  std::vector<int> states;
  std::uint64_t seed = 0;

  int at(int t, int n) const { return states[static_cast<std::size_t>(t) * n_components + n]; }
  int& at(int t, int n) { return states[static_cast<std::size_t>(t) * n_components + n]; }
  std::span<const int> row(int t) const {
    return {states.data() + static_cast<std::size_t>(t) * n_components,
            static_cast<std::size_t>(n_components)};
  }
};

/// Observations y_1..y_T, stored T x N row-major; entry -1 means missing.
struct ObservationSet {
  int n_components = 0;
  int horizon = 0;  // T
  std::vector<int> obs;

  int at(int t, int n) const {  // t in 1..T
    return obs[static_cast<std::size_t>(t - 1) * n_components + n];
  }
  int& at(int t, int n) {
    return obs[static_cast<std::size_t>(t - 1) * n_components + n];
  }
};

/// Draws x_0 from the initial law and x_t | x_{t-1} from the transition
/// kernel. Every single draw is keyed by (rng, t, n), so the result does not
/// depend on evaluation order.
template <typename Model>
Trajectory sample_trajectory(const Model& model, std::span<const double> theta, int horizon,
                             Rng rng) {
  if (horizon < 1) throw ConfigError("sample_trajectory: horizon must be >= 1");
  const int n = model.n_components();
  constexpr int card = Model::kStateCard;
  Trajectory traj;
  traj.n_components = n;
  traj.horizon = horizon;
  traj.seed = rng.key();
  traj.states.resize(static_cast<std::size_t>(horizon + 1) * n);

  double row[card];
  for (int i = 0; i < n; ++i) {
    model.initial_dist(i, theta, row);
    Rng r = rng.derive("x", 0, i);
    traj.at(0, i) = r.categorical({row, card});
  }
  std::vector<double> fields;
  if constexpr (!Model::kHomogeneousField) fields.resize(n);
  for (int t = 1; t <= horizon; ++t) {
    std::span<const int> prev = traj.row(t - 1);
    double count_field = 0.0;
    if constexpr (Model::kHomogeneousField)
      count_field = model.field_from_count(count_in_state(prev, n, model.infectious_state()));
    else
      model.fields(theta, prev, fields.data());
    for (int i = 0; i < n; ++i) {
      if constexpr (Model::kHomogeneousField)
        model.row_from_field(i, prev[i], count_field, theta, row);
      else
        model.row_from_field(i, prev[i], fields[i], theta, row);
      Rng r = rng.derive("x", t, i);
      traj.at(t, i) = r.categorical({row, card});
    }
  }
  return traj;
}

/// Draws y_t^n from the emission law at the trajectory's state.
template <typename Model>
ObservationSet sample_observations(const Model& model, std::span<const double> theta,
                                   const Trajectory& traj, Rng rng) {
  const int n = model.n_components();
  constexpr int card = Model::kStateCard;
  ObservationSet y;
  y.n_components = n;
  y.horizon = traj.horizon;
  y.obs.resize(static_cast<std::size_t>(traj.horizon) * n);
  double detect[card];  // p(y = 1 | x)
  for (int t = 1; t <= traj.horizon; ++t)
    for (int i = 0; i < n; ++i) {
      model.emission(i, 1, theta, detect);
      Rng r = rng.derive("y", t, i);
      y.at(t, i) = r.bernoulli(detect[traj.at(t, i)]) ? 1 : 0;
    }
  return y;
}

struct OutbreakDraw {
  Trajectory trajectory;
  ObservationSet observations;
  int attempts = 0;
};

/// Number of components that ever leave the initial susceptible state.
inline int ever_infected_count(const Trajectory& traj) {
  int count = 0;
  for (int i = 0; i < traj.n_components; ++i)
    for (int t = 0; t <= traj.horizon; ++t)
      if (traj.at(t, i) != 0) {
        ++count;
        break;
      }
  return count;
}

/// Resamples until the realisation contains at least `min_infected`
/// ever-infected components.
template <typename Model>
OutbreakDraw ensure_outbreak(const Model& model, std::span<const double> theta, int horizon,
                             Rng rng, int min_infected, int max_attempts = 1000) {
  if (min_infected < 0) throw ConfigError("ensure_outbreak: min_infected must be >= 0");
  for (int a = 0; a < max_attempts; ++a) {
    Trajectory traj = sample_trajectory(model, theta, horizon, rng.derive("attempt", a));
    if (ever_infected_count(traj) >= min_infected) {
      ObservationSet y = sample_observations(model, theta, traj, rng.derive("attempt_y", a));
      return {std::move(traj), std::move(y), a + 1};
    }
  }
  throw NumericError("ensure_outbreak: retry cap of " + std::to_string(max_attempts) +
                     " attempts exceeded");
}

}  // namespace simbacl
