#pragma once

#include <cmath>
#include <span>

#include "simbacl/covariates.hpp"
#include "simbacl/model.hpp"
#include "simbacl/params.hpp"

namespace simbacl {

/// Susceptible-exposed-infected-removed individual-based model.
/// States S=0, E=1, I=2, R=3; only I exerts infection pressure, E progresses
/// to I at a shared rate, R is absorbing.
class SeirModel {
public:
  static constexpr int kStateCard = 4;
  static constexpr bool kHomogeneousField = true;
  static constexpr int kS = 0;
  static constexpr int kE = 1;
  static constexpr int kI = 2;
  static constexpr int kR = 3;

  SeirModel(int n_components, Covariates cov)
      : n_(n_components),
        cov_(std::move(cov)),
        layout_({{"beta0", 2, Transform::identity},
                 {"beta_lambda", 2, Transform::identity},
                 {"rho", 1, Transform::log},
                 {"beta_gamma", 2, Transform::identity},
                 {"q", 4, Transform::logit},
                 {"iota", 1, Transform::log}}) {
    cov_.validate();
    if (static_cast<int>(cov_.w.size()) != n_) throw ConfigError("seir: covariate rows != N");
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
    return sigmoid(th[5] * S(cov_.w[n][0]) + th[6] * S(cov_.w[n][1]));
  }

  /// Initial infections start in I; E and R start empty.
  template <typename S>
  void initial_dist(int n, std::span<const S> th, S* out) const {
    S p = sigmoid(th[0] * S(cov_.w[n][0]) + th[1] * S(cov_.w[n][1]));
    out[kS] = S(1.0) - p;
    out[kE] = S(0.0);
    out[kI] = p;
    out[kR] = S(0.0);
  }

  template <typename S, typename F>
  void row_from_field(int n, int own_prev, const F& field, std::span<const S> th, S* out) const {
    for (int x = 0; x < kStateCard; ++x) out[x] = S(0.0);
    switch (own_prev) {
      case kS: {
        S stay = exp(-lambda(th, n) * (S(field) + exp(th[11])));
        out[kS] = stay;
        out[kE] = S(1.0) - stay;
        break;
      }
      case kE: {
        S stay = exp(-exp(th[4]));
        out[kE] = stay;
        out[kI] = S(1.0) - stay;
        break;
      }
      case kI: {
        S stay = exp(-gamma(th, n));
        out[kI] = stay;
        out[kR] = S(1.0) - stay;
        break;
      }
      default:
        out[kR] = S(1.0);
    }
  }

  template <typename S>
  void emission(int n, int y, std::span<const S> th, S* out) const {
    (void)n;
    if (y != 0 && y != 1) throw DataError("seir: observation outside {0,1}");
    for (int x = 0; x < kStateCard; ++x) {
      S q = sigmoid(th[7 + x]);
      out[x] = y != 0 ? q : S(1.0) - q;
    }
  }

private:
  int n_;
  Covariates cov_;
  ParamLayout layout_;
};

}  // namespace simbacl
