#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "simbacl/covariates.hpp"
#include "simbacl/model.hpp"
#include "simbacl/params.hpp"

namespace simbacl {

/// Susceptible-infected-notified-removed model for farm-level outbreaks.
/// States S=0, I=1, N=2, R=3. Infection pressure between farms scales with
/// herd composition and a Cauchy-type spatial kernel; notified farms are
/// observed perfectly (q = [0,0,1,0], fixed) and culled after one day.
class SinrModel {
public:
  static constexpr int kStateCard = 4;
  static constexpr bool kHomogeneousField = false;
  static constexpr int kS = 0;
  static constexpr int kI = 1;
  static constexpr int kN = 2;
  static constexpr int kR = 3;

  /// When streaming is on, pairwise distances are recomputed on demand
  /// instead of held in the O(N^2) cache.
  SinrModel(int n_components, Covariates cov, bool streaming_distances = false)
      : n_(n_components),
        cov_(std::move(cov)),
        streaming_(streaming_distances),
        layout_({{"tau", 1, Transform::log},
                 {"gamma", 1, Transform::log},
                 {"delta", 1, Transform::log},
                 {"zeta", 1, Transform::log},
                 {"chi", 1, Transform::log},
                 {"psi", 1, Transform::log},
                 {"xi", 1, Transform::log}}) {
    cov_.validate();
    if (!cov_.has_farms() || !cov_.has_coords())
      throw ConfigError("sinr: farm records with coordinates required");
    if (static_cast<int>(cov_.cattle.size()) != n_) throw ConfigError("sinr: farm rows != N");
    if (!streaming_) {
      dist2_.resize(static_cast<std::size_t>(n_) * n_);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
          double d = cov_.distance_km(i, j);
          dist2_[static_cast<std::size_t>(i) * n_ + j] = d * d;
        }
    }
  }

  int n_components() const { return n_; }
  int infectious_state() const { return kI; }
  const ParamLayout& layout() const { return layout_; }
  const Covariates& covariates() const { return cov_; }

  double dist2(int i, int j) const {
    if (!streaming_) return dist2_[static_cast<std::size_t>(i) * n_ + j];
    double d = cov_.distance_km(i, j);
    return d * d;
  }

  // th = (log tau, log gamma, log delta, log zeta, log chi, log psi, log xi)

  template <typename S>
  S infectivity(std::span<const S> th, int m) const {
    S chi = exp(th[4]);
    return exp(th[3]) * pow_pd(cov_.cattle[m], chi) + pow_pd(cov_.sheep[m], chi);
  }
  template <typename S>
  S susceptibility(std::span<const S> th, int m) const {
    S chi = exp(th[4]);
    return exp(th[6]) * pow_pd(cov_.cattle[m], chi) + pow_pd(cov_.sheep[m], chi);
  }

  /// Pairwise pressure of source on target divided by N (the pressure sum
  /// carries its own 1/N on top of the 1/N inside the pairwise rate).
  template <typename S>
  S field_weight(std::span<const S> th, int source, int target) const {
    S psi = exp(th[5]);
    S kernel = psi / (S(dist2(source, target)) + psi * psi);
    S lam = (exp(th[2]) / S(static_cast<double>(n_))) * infectivity(th, source) *
            susceptibility(th, target) * kernel;
    return lam / S(static_cast<double>(n_));
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
    std::vector<S> sus(n_);
    for (int n = 0; n < n_; ++n) {
      sus[n] = susceptibility(th, n);
      out[n] = S(0.0);
    }
    S psi = exp(th[5]);
    S scale = exp(th[2]) / S(static_cast<double>(n_) * n_);
    for (int m = 0; m < n_; ++m) {
      if (x_prev[m] != kI) continue;
      S inf_m = infectivity(th, m) * scale;
      for (int n = 0; n < n_; ++n)
        out[n] += inf_m * sus[n] * psi / (S(dist2(m, n)) + psi * psi);
    }
  }

  /// Initial infection probability 1 - exp(-tau * total pressure potential).
  template <typename S>
  void initial_dist(int n, std::span<const S> th, S* out) const {
    S press(0.0);
    for (int m = 0; m < n_; ++m) press += field_weight(th, m, n);
    S p = S(1.0) - exp(-exp(th[0]) * press);
    out[kS] = S(1.0) - p;
    out[kI] = p;
    out[kN] = S(0.0);
    out[kR] = S(0.0);
  }

  template <typename S, typename F>
  void row_from_field(int n, int own_prev, const F& field, std::span<const S> th, S* out) const {
    (void)n;
    for (int x = 0; x < kStateCard; ++x) out[x] = S(0.0);
    switch (own_prev) {
      case kS: {
        S stay = exp(-S(field));
        out[kS] = stay;
        out[kI] = S(1.0) - stay;
        break;
      }
      case kI: {
        S stay = exp(-exp(th[1]));
        out[kI] = stay;
        out[kN] = S(1.0) - stay;
        break;
      }
      case kN:
        out[kR] = S(1.0);  // culled one day after notification
        break;
      default:
        out[kR] = S(1.0);
    }
  }

  /// Only notified farms produce detections, with certainty.
  template <typename S>
  void emission(int n, int y, std::span<const S> th, S* out) const {
    (void)n;
    (void)th;
    if (y != 0 && y != 1) throw DataError("sinr: observation outside {0,1}");
    for (int x = 0; x < kStateCard; ++x)
      out[x] = (x == kN) == (y != 0) ? S(1.0) : S(0.0);
  }

private:
  int n_;
  Covariates cov_;
  bool streaming_;
  ParamLayout layout_;
  std::vector<double> dist2_;
};

}  // namespace simbacl
