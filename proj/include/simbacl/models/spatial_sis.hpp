#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "simbacl/covariates.hpp"
#include "simbacl/model.hpp"
#include "simbacl/params.hpp"

namespace simbacl {

/// SIS variant where infection pressure is weighted by a Gaussian spatial
/// kernel exp(-E^2 / (2 psi^2)) on pairwise distances.
class SpatialSisModel {
public:
  static constexpr int kStateCard = 2;
  static constexpr bool kHomogeneousField = false;
  static constexpr int kS = 0;
  static constexpr int kI = 1;

  SpatialSisModel(int n_components, Covariates cov)
      : n_(n_components),
        cov_(std::move(cov)),
        layout_({{"beta0", 2, Transform::identity},
                 {"beta_lambda", 2, Transform::identity},
                 {"beta_gamma", 2, Transform::identity},
                 {"q", 2, Transform::logit},
                 {"iota", 1, Transform::log},
                 {"psi", 1, Transform::log}}) {
    cov_.validate();
    if (static_cast<int>(cov_.w.size()) != n_) throw ConfigError("sis_spatial: covariate rows != N");
    if (!cov_.has_coords()) throw ConfigError("sis_spatial: coordinates required");
    dist2_.resize(static_cast<std::size_t>(n_) * n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        double d = cov_.distance_km(i, j);
        dist2_[static_cast<std::size_t>(i) * n_ + j] = d * d;
      }
  }

  int n_components() const { return n_; }
  int infectious_state() const { return kI; }
  const ParamLayout& layout() const { return layout_; }
  const Covariates& covariates() const { return cov_; }

  template <typename S>
  S lambda(std::span<const S> th, int n) const {
    return sigmoid(th[2] * S(cov_.w[n][0]) + th[3] * S(cov_.w[n][1]));
  }
  template <typename S>
  S gamma(std::span<const S> th, int n) const {
    return sigmoid(th[4] * S(cov_.w[n][0]) + th[5] * S(cov_.w[n][1]));
  }

  template <typename S>
  void initial_dist(int n, std::span<const S> th, S* out) const {
    S p = sigmoid(th[0] * S(cov_.w[n][0]) + th[1] * S(cov_.w[n][1]));
    out[kS] = S(1.0) - p;
    out[kI] = p;
  }

  /// Kernel weight of an infectious `source` on `target`, 1/N included.
  template <typename S>
  S field_weight(std::span<const S> th, int source, int target) const {
    S psi = exp(th[9]);
    S d2 = S(dist2_[static_cast<std::size_t>(target) * n_ + source]);
    return exp(-d2 / (S(2.0) * psi * psi)) / S(static_cast<double>(n_));
  }

  template <typename S, typename StateLike>
  S field_for(std::span<const S> th, int target, const StateLike& x_prev) const {
    S f(0.0);
    for (int m = 0; m < n_; ++m)
      if (x_prev[m] == kI) f += field_weight(th, m, target);
    return f;
  }

  template <typename S, typename StateLike>
  void fields(std::span<const S> th, const StateLike& x_prev, S* out) const {
    for (int n = 0; n < n_; ++n) out[n] = S(0.0);
    for (int m = 0; m < n_; ++m) {
      if (x_prev[m] != kI) continue;
      for (int n = 0; n < n_; ++n) out[n] += field_weight(th, m, n);
    }
  }

  template <typename S, typename F>
  void row_from_field(int n, int own_prev, const F& field, std::span<const S> th, S* out) const {
    if (own_prev == kS) {
      S stay = exp(-lambda(th, n) * (S(field) + exp(th[8])));
      out[kS] = stay;
      out[kI] = S(1.0) - stay;
    } else {
      S stay = exp(-gamma(th, n));
      out[kS] = S(1.0) - stay;
      out[kI] = stay;
    }
  }

  template <typename S>
  void emission(int n, int y, std::span<const S> th, S* out) const {
    (void)n;
    if (y != 0 && y != 1) throw DataError("sis_spatial: observation outside {0,1}");
    for (int x = 0; x < kStateCard; ++x) {
      S q = sigmoid(th[6 + x]);
      out[x] = y != 0 ? q : S(1.0) - q;
    }
  }

  /// As for the homogeneous SIS, but the interaction weight of source m on
  /// target n is the spatial kernel itself, and the worst-case field of each
  /// component replaces the count bound of 1.
  AssumptionConstants assumption_constants(std::span<const double> th) const {
    AssumptionConstants c;
    c.s.resize(n_);
    c.s_max.resize(n_);
    double iota = std::exp(th[8]);
    double eps = 1.0;
    for (int n = 0; n < n_; ++n) {
      double lam = lambda(th, n);
      double gam = gamma(th, n);
      double fmax = 0.0;
      for (int m = 0; m < n_; ++m) fmax += field_weight(th, m, n);
      c.s[n] = lam;
      c.s_max[n] = std::max(lam * lam, lam * lam * lam);
      eps = std::min(eps, std::exp(-lam * (fmax + iota)));
      eps = std::min(eps, -std::expm1(-lam * iota));
      eps = std::min(eps, -std::expm1(-gam));
      eps = std::min(eps, std::exp(-gam));
    }
    if (!(eps > 0.0))
      throw NumericError("sis_spatial: degenerate kernel, some transition entry can reach 0");
    c.epsilon = eps;
    c.a_of_eps = a_of_epsilon(eps);
    c.unit_weights = false;
    // d(source, target, x) = N * field_weight * 1(x infected): the assumption
    // carries its own 1/N, so the kernel weight appears without it.
    const double* d2 = dist2_.data();
    double psi = std::exp(th[9]);
    int n = n_;
    c.weight = [d2, psi, n](int source, int target) {
      return std::exp(-d2[static_cast<std::size_t>(target) * n + source] / (2.0 * psi * psi));
    };
    return c;
  }

private:
  int n_;
  Covariates cov_;
  ParamLayout layout_;
  std::vector<double> dist2_;
};

}  // namespace simbacl
