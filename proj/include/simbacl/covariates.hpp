#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "simbacl/error.hpp"
#include "simbacl/rng.hpp"

namespace simbacl {

/// Per-component covariate records. Regression models use `w` (w[0] is the
/// intercept); the farm model uses coordinates and animal counts.
struct Covariates {
  std::vector<std::array<double, 2>> w;
  std::vector<std::array<double, 2>> coords_km;
  std::vector<double> cattle;
  std::vector<double> sheep;

  std::size_t size() const { return w.empty() ? cattle.size() : w.size(); }

  bool has_coords() const { return !coords_km.empty(); }
  bool has_farms() const { return !cattle.empty(); }

  void validate() const {
    for (double c : cattle)
      if (c < 0) throw DataError("covariates: animal counts must be nonnegative");
    for (double s : sheep)
      if (s < 0) throw DataError("covariates: animal counts must be nonnegative");
    if (!cattle.empty() && cattle.size() != sheep.size())
      throw DataError("covariates: cattle/sheep column length mismatch");
    if (!coords_km.empty() && !cattle.empty() && coords_km.size() != cattle.size())
      throw DataError("covariates: coordinate/record count mismatch");
  }

  double distance_km(int i, int j) const {
    double dx = coords_km[i][0] - coords_km[j][0];
    double dy = coords_km[i][1] - coords_km[j][1];
    return std::sqrt(dx * dx + dy * dy);
  }
};

/// The standard synthetic design: w1 = 1 intercept, w2 ~ Normal(0,1).
inline Covariates standard_covariates(int n, Rng rng) {
  Covariates c;
  c.w.resize(n);
  for (int i = 0; i < n; ++i) c.w[i] = {1.0, rng.derive("w2", i).normal()};
  return c;
}

/// Covariates with planar positions uniform on a square, for the spatial
/// models.
inline Covariates spatial_covariates(int n, double side_km, Rng rng) {
  Covariates c = standard_covariates(n, rng);
  c.coords_km.resize(n);
  for (int i = 0; i < n; ++i) {
    Rng r = rng.derive("pos", i);
    c.coords_km[i] = {side_km * r.uniform(), side_km * r.uniform()};
  }
  return c;
}

/// Synthetic farm records with the same schema as the real outbreak data:
/// positions on a square, log-normal-ish herd sizes, a fraction of
/// sheep-only and cattle-only farms.
inline Covariates synthetic_farms(int n, double side_km, Rng rng) {
  Covariates c;
  c.coords_km.resize(n);
  c.cattle.resize(n);
  c.sheep.resize(n);
  for (int i = 0; i < n; ++i) {
    Rng r = rng.derive("farm", i);
    c.coords_km[i] = {side_km * r.uniform(), side_km * r.uniform()};
    double u = r.uniform();
    double cattle = std::floor(std::exp(3.5 + 1.0 * r.normal()));
    double sheep = std::floor(std::exp(4.5 + 1.2 * r.normal()));
    if (u < 0.25)
      cattle = 0;  // sheep-only farm
    else if (u < 0.4)
      sheep = 0;
    c.cattle[i] = cattle;
    c.sheep[i] = sheep;
  }
  return c;
}

}  // namespace simbacl
