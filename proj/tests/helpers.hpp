#pragma once

#include <cmath>
#include <vector>

#include "simbacl/covariates.hpp"
#include "simbacl/models/seir.hpp"
#include "simbacl/models/sinr.hpp"
#include "simbacl/models/sis.hpp"
#include "simbacl/models/spatial_sis.hpp"
#include "simbacl/params.hpp"
#include "simbacl/rng.hpp"

namespace simbacl::test {

// Data-generating parameters used throughout the experiments, natural scale.
inline std::vector<double> sis_baseline_natural() {
  return {-std::log(1.0 / 0.01 - 1.0), 0.0,  // beta0: 1% initially infected
          -1.0, 2.0,                         // beta_lambda
          -1.0, -1.0,                        // beta_gamma
          0.6,  0.4,                         // q
          0.001};                            // iota
}

inline std::vector<double> seir_baseline_natural(double q_s = 0.0, double q_e = 0.0) {
  return {-std::log(1.0 / 0.01 - 1.0), 0.0,  // beta0
          -1.0, 2.0,                         // beta_lambda
          0.2,                               // rho
          -1.0, -1.0,                        // beta_gamma
          q_s,  q_e, 0.6, 0.4,               // q
          0.001};                            // iota
}

inline std::vector<double> sinr_demo_natural() {
  return {40.0, 0.4, 2.0, 1.2, 0.3, 1.5, 1.1};  // tau gamma delta zeta chi psi xi
}

inline SisModel sis_model(int n, std::uint64_t cov_seed = 11, bool intercept_only = false) {
  Covariates cov = standard_covariates(n, Rng(cov_seed));
  if (intercept_only)
    for (auto& w : cov.w) w[1] = 0.0;
  return SisModel(n, std::move(cov));
}

inline SeirModel seir_model(int n, std::uint64_t cov_seed = 11, bool intercept_only = false) {
  Covariates cov = standard_covariates(n, Rng(cov_seed));
  if (intercept_only)
    for (auto& w : cov.w) w[1] = 0.0;
  return SeirModel(n, std::move(cov));
}

inline SpatialSisModel spatial_sis_model(int n, std::uint64_t cov_seed = 11) {
  return SpatialSisModel(n, spatial_covariates(n, 5.0, Rng(cov_seed)));
}

inline SinrModel sinr_model(int n, std::uint64_t cov_seed = 11) {
  return SinrModel(n, synthetic_farms(n, 20.0, Rng(cov_seed)));
}

template <typename Model>
std::vector<double> theta_u(const Model& m, const std::vector<double>& natural) {
  return to_unconstrained(m.layout(), natural);
}

}  // namespace simbacl::test
