#pragma once

#include <functional>
#include <span>
#include <vector>

#include "simbacl/dual.hpp"
#include "simbacl/error.hpp"
#include "simbacl/params.hpp"

namespace simbacl {

// A model is any type exposing (duck-typed; the filters are templates):
//
//   int n_components() const;
//   static constexpr int kStateCard;
//   static constexpr bool kHomogeneousField;   // interaction enters every
//                                              // component through one count
//   int infectious_state() const;              // state that exerts pressure
//   const ParamLayout& layout() const;
//   template <S> void initial_dist(int n, span<const S> th, S* out) const;
//   template <S> void emission(int n, int y, span<const S> th, S* out) const;
//   template <S, F> void row_from_field(int n, int own_prev, const F& field,
//                                       span<const S> th, S* out) const;
// homogeneous models additionally:
//   double field_from_count(int count) const;
// heterogeneous models additionally:
//   template <S, State> S field_for(span<const S> th, int target,
//                                   const State& x_prev) const;
//   template <S, State> void fields(span<const S> th, const State& x_prev,
//                                   S* out) const;       // all targets at once
//   template <S> S field_weight(span<const S> th, int source, int target) const;
//
// All operations are pure; model objects are immutable after construction.

/// Previous-state accessor over a trajectory row with a handful of
/// components overridden (the block being filtered).
struct OverriddenState {
  std::span<const int> base;
  std::span<const int> block;   // component indices, ascending
  std::span<const int> states;  // override values, same length as block

  int operator[](int n) const {
    for (std::size_t j = 0; j < block.size(); ++j)
      if (block[j] == n) return states[j];
    return base[n];
  }
};

template <typename StateLike>
int count_in_state(const StateLike& x, int n, int state) {
  int c = 0;
  for (int i = 0; i < n; ++i) c += (x[i] == state);
  return c;
}

/// Transition row of component n given the full previous state.
template <typename Model, typename S, typename StateLike>
void transition_row(const Model& m, int n, const StateLike& x_prev, std::span<const S> th,
                    S* out) {
  if constexpr (Model::kHomogeneousField) {
    int c = count_in_state(x_prev, m.n_components(), m.infectious_state());
    m.row_from_field(n, x_prev[n], m.field_from_count(c), th, out);
  } else {
    S f = m.field_for(th, n, x_prev);
    m.row_from_field(n, x_prev[n], f, th, out);
  }
}

/// Emission vector, with a negative y meaning "missing": every state gets
/// likelihood 1 so the observation carries no information.
template <typename Model, typename S>
void emission_or_missing(const Model& m, int n, int y, std::span<const S> th, S* out) {
  if (y < 0) {
    for (int x = 0; x < Model::kStateCard; ++x) out[x] = S(1.0);
    return;
  }
  m.emission(n, y, th, out);
}

/// Constants entering the feedback-removal error bound: per-component scale
/// s_n, the kernel floor epsilon, and the interaction weights of
/// d(source, target, x) = weight * 1(x = infectious).
struct AssumptionConstants {
  std::vector<double> s;
  std::vector<double> s_max;  // max(s^2, s^3)
  double epsilon = 0.0;
  double a_of_eps = 0.0;
  bool unit_weights = true;  // d is the plain infection indicator
  std::function<double(int source, int target)> weight;

  double d_weight(int source, int target) const {
    return unit_weights ? 1.0 : weight(source, target);
  }
};

inline double a_of_epsilon(double eps) {
  return 2.0 * (1.0 / (2.0 * eps * eps) + 1.0 / (3.0 * eps * eps * eps));
}

}  // namespace simbacl
