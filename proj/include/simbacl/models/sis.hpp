#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "simbacl/covariates.hpp"
#include "simbacl/model.hpp"
#include "simbacl/params.hpp"

namespace simbacl {

/// Susceptible-infected-susceptible individual-based model. States S=0, I=1.
/// Infection pressure is the infected fraction plus an environmental rate;
/// per-individual rates are logistic regressions on the covariates.
class SisModel {
public:
  static constexpr int kStateCard = 2;
  static constexpr bool kHomogeneousField = true;
  static constexpr int kS = 0;
  static constexpr int kI = 1;

  SisModel(int n_components, Covariates cov)
      : n_(n_components),
        cov_(std::move(cov)),
        layout_({{"beta0", 2, Transform::identity},
                 {"beta_lambda", 2, Transform::identity},
                 {"beta_gamma", 2, Transform::identity},
                 {"q", 2, Transform::logit},
                 {"iota", 1, Transform::log}}) {
    cov_.validate();
    if (static_cast<int>(cov_.w.size()) != n_)
      throw ConfigError("sis: covariate rows != N");
  }

  int n_components() const { return n_; }
  int infectious_state() const { return kI; }
  const ParamLayout& layout() const { return layout_; }
  const Covariates& covariates() const { return cov_; }

  double field_from_count(int count) const { return static_cast<double>(count) / n_; }

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
    if (y != 0 && y != 1) throw DataError("sis: observation outside {0,1}");
    for (int x = 0; x < kStateCard; ++x) {
      S q = sigmoid(th[6 + x]);
      out[x] = y != 0 ? q : S(1.0) - q;
    }
  }

  /// Constants for the feedback-removal bound: s_n = lambda_n, d the infected
  /// indicator, and epsilon the smallest attainable kernel entry. The entry
  /// 1 - e^{-lambda iota} vanishes as iota -> 0, in which case the kernel
  /// floor degenerates.
  AssumptionConstants assumption_constants(std::span<const double> th) const {
    AssumptionConstants c;
    c.s.resize(n_);
    c.s_max.resize(n_);
    double iota = std::exp(th[8]);
    double eps = 1.0;
    for (int n = 0; n < n_; ++n) {
      double lam = lambda(th, n);
      double gam = gamma(th, n);
      c.s[n] = lam;
      c.s_max[n] = std::max(lam * lam, lam * lam * lam);
      eps = std::min(eps, std::exp(-lam * (1.0 + iota)));
      eps = std::min(eps, -std::expm1(-lam * iota));
      eps = std::min(eps, -std::expm1(-gam));
      eps = std::min(eps, std::exp(-gam));
    }
    if (!(eps > 0.0))
      throw NumericError("sis: degenerate kernel, some transition entry can reach 0");
    c.epsilon = eps;
    c.a_of_eps = a_of_epsilon(eps);
    c.unit_weights = true;
    return c;
  }

private:
  int n_;
  Covariates cov_;
  ParamLayout layout_;
};

}  // namespace simbacl
