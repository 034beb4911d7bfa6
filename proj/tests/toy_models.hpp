#pragma once

#include <span>

#include "simbacl/model.hpp"
#include "simbacl/params.hpp"

namespace simbacl::test {

/// Deterministic two-state rotation; the trajectory is the parity orbit.
class CycleModel {
public:
  static constexpr int kStateCard = 2;
  static constexpr bool kHomogeneousField = true;

  explicit CycleModel(int n) : n_(n), layout_({{"q", 2, Transform::logit}}) {}

  int n_components() const { return n_; }
  int infectious_state() const { return 1; }
  const ParamLayout& layout() const { return layout_; }
  double field_from_count(int) const { return 0.0; }

  template <typename S>
  void initial_dist(int, std::span<const S>, S* out) const {
    out[0] = S(1.0);
    out[1] = S(0.0);
  }
  template <typename S, typename F>
  void row_from_field(int, int own_prev, const F&, std::span<const S>, S* out) const {
    out[own_prev] = S(0.0);
    out[1 - own_prev] = S(1.0);
  }
  template <typename S>
  void emission(int, int y, std::span<const S> th, S* out) const {
    for (int x = 0; x < 2; ++x) {
      S q = sigmoid(th[x]);
      out[x] = y != 0 ? q : S(1.0) - q;
    }
  }

  /// Stub constants for bound checks: the block state is deterministic, so
  /// the conditional variance term vanishes whatever s and epsilon are.
  AssumptionConstants assumption_constants(std::span<const double>) const {
    AssumptionConstants c;
    c.s.assign(n_, 1.0);
    c.s_max.assign(n_, 1.0);
    c.epsilon = 0.5;
    c.a_of_eps = a_of_epsilon(c.epsilon);
    return c;
  }

private:
  int n_;
  ParamLayout layout_;
};

/// Independent per-component chains: transition ignores every other
/// component, so the simulation feedback factor is identically one.
class IndependentModel {
public:
  static constexpr int kStateCard = 2;
  static constexpr bool kHomogeneousField = true;

  explicit IndependentModel(int n) : n_(n),
        layout_({{"p0", 1, Transform::logit},
                 {"stay0", 1, Transform::logit},
                 {"stay1", 1, Transform::logit},
                 {"q", 2, Transform::logit}}) {}

  int n_components() const { return n_; }
  int infectious_state() const { return 1; }
  const ParamLayout& layout() const { return layout_; }
  double field_from_count(int) const { return 0.0; }

  template <typename S>
  void initial_dist(int, std::span<const S> th, S* out) const {
    S p = sigmoid(th[0]);
    out[0] = S(1.0) - p;
    out[1] = p;
  }
  template <typename S, typename F>
  void row_from_field(int, int own_prev, const F&, std::span<const S> th, S* out) const {
    S stay = sigmoid(th[1 + own_prev]);
    out[own_prev] = stay;
    out[1 - own_prev] = S(1.0) - stay;
  }
  template <typename S>
  void emission(int, int y, std::span<const S> th, S* out) const {
    for (int x = 0; x < 2; ++x) {
      S q = sigmoid(th[3 + x]);
      out[x] = y != 0 ? q : S(1.0) - q;
    }
  }

  /// No interaction at all: s = 0, and the kernel floor is the smallest
  /// stay/leave probability.
  AssumptionConstants assumption_constants(std::span<const double> th) const {
    AssumptionConstants c;
    c.s.assign(n_, 0.0);
    c.s_max.assign(n_, 0.0);
    double s0 = sigmoid(th[1]), s1 = sigmoid(th[2]);
    c.epsilon = std::min(std::min(s0, 1.0 - s0), std::min(s1, 1.0 - s1));
    c.a_of_eps = a_of_epsilon(c.epsilon);
    return c;
  }

private:
  int n_;
  ParamLayout layout_;
};

/// The parameter enters only through the emission, identically across
/// states: p(y != 0 | x) = sigmoid(theta) for every x, uniform dynamics.
class EmissionOnlyModel {
public:
  static constexpr int kStateCard = 2;
  static constexpr bool kHomogeneousField = true;

  explicit EmissionOnlyModel(int n) : n_(n), layout_({{"theta", 1, Transform::identity}}) {}

  int n_components() const { return n_; }
  int infectious_state() const { return 1; }
  const ParamLayout& layout() const { return layout_; }
  double field_from_count(int) const { return 0.0; }

  template <typename S>
  void initial_dist(int, std::span<const S>, S* out) const {
    out[0] = S(0.5);
    out[1] = S(0.5);
  }
  template <typename S, typename F>
  void row_from_field(int, int, const F&, std::span<const S>, S* out) const {
    out[0] = S(0.5);
    out[1] = S(0.5);
  }
  template <typename S>
  void emission(int, int y, std::span<const S> th, S* out) const {
    S q = sigmoid(th[0]);
    out[0] = y != 0 ? q : S(1.0) - q;
    out[1] = out[0];
  }

private:
  int n_;
  ParamLayout layout_;
};

/// One latent state only: the likelihood is a pure product of emissions.
class SingleStateModel {
public:
  static constexpr int kStateCard = 1;
  static constexpr bool kHomogeneousField = true;

  explicit SingleStateModel(int n) : n_(n), layout_({{"q", 1, Transform::logit}}) {}

  int n_components() const { return n_; }
  int infectious_state() const { return 0; }
  const ParamLayout& layout() const { return layout_; }
  double field_from_count(int) const { return 0.0; }

  template <typename S>
  void initial_dist(int, std::span<const S>, S* out) const {
    out[0] = S(1.0);
  }
  template <typename S, typename F>
  void row_from_field(int, int, const F&, std::span<const S>, S* out) const {
    out[0] = S(1.0);
  }
  template <typename S>
  void emission(int, int y, std::span<const S> th, S* out) const {
    S q = sigmoid(th[0]);
    out[0] = y != 0 ? q : S(1.0) - q;
  }

private:
  int n_;
  ParamLayout layout_;
};

/// Nothing depends on the parameter; gradients must vanish identically.
class ConstantModel {
public:
  static constexpr int kStateCard = 2;
  static constexpr bool kHomogeneousField = true;

  explicit ConstantModel(int n) : n_(n), layout_({{"unused", 1, Transform::identity}}) {}

  int n_components() const { return n_; }
  int infectious_state() const { return 1; }
  const ParamLayout& layout() const { return layout_; }
  double field_from_count(int) const { return 0.0; }

  template <typename S>
  void initial_dist(int, std::span<const S>, S* out) const {
    out[0] = S(0.7);
    out[1] = S(0.3);
  }
  template <typename S, typename F>
  void row_from_field(int, int own_prev, const F&, std::span<const S>, S* out) const {
    out[own_prev] = S(0.8);
    out[1 - own_prev] = S(0.2);
  }
  template <typename S>
  void emission(int, int y, std::span<const S>, S* out) const {
    out[0] = y != 0 ? S(0.6) : S(0.4);
    out[1] = y != 0 ? S(0.3) : S(0.7);
  }

private:
  int n_;
  ParamLayout layout_;
};

}  // namespace simbacl::test
