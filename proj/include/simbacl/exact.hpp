#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "simbacl/math.hpp"
#include "simbacl/model.hpp"
#include "simbacl/simulate.hpp"

namespace simbacl {

// Brute-force references on tiny instances. Everything here runs in linear
// space with compensated summation and is deliberately written without any
// of the machinery it is meant to check.

inline constexpr std::uint64_t kJointStateCap = 1u << 20;

/// Mixed-radix decoding of joint states: digit n of `code` in base card.
class JointIndex {
public:
  JointIndex(int n_components, int card) : n_(n_components), card_(card) {
    size_ = 1;
    for (int i = 0; i < n_; ++i) {
      size_ *= card_;
      if (size_ > kJointStateCap)
        throw CapacityError("joint state space exceeds 2^20 states");
    }
  }

  std::uint64_t size() const { return size_; }
  int n_components() const { return n_; }

  void decode(std::uint64_t code, int* states) const {
    for (int i = 0; i < n_; ++i) {
      states[i] = static_cast<int>(code % card_);
      code /= card_;
    }
  }

  std::uint64_t encode(std::span<const int> states) const {
    std::uint64_t code = 0;
    for (int i = n_ - 1; i >= 0; --i) code = code * card_ + states[i];
    return code;
  }

private:
  int n_;
  int card_;
  std::uint64_t size_ = 1;
};

struct JointFilterResult {
  double loglik = 0.0;
  std::vector<double> increments;  // p(y_t | y_{1:t-1}), linear scale
  std::vector<double> dist;        // final filtering distribution
};

/// Forward algorithm on the joint space. A block mask restricts the
/// correction to the given components; everything else is treated as
/// unobserved (emission identically one).
template <typename Model>
JointFilterResult exact_joint_filter(const Model& model, std::span<const double> theta,
                                     const ObservationSet& y,
                                     std::span<const int> observed_components = {}) {
  const int n = model.n_components();
  constexpr int card = Model::kStateCard;
  JointIndex idx(n, card);
  const std::uint64_t m = idx.size();

  std::vector<bool> observed(n, true);
  if (!observed_components.empty()) {
    observed.assign(n, false);
    for (int c : observed_components) observed[c] = true;
  }

  std::vector<int> states(n);
  std::vector<double> dist(m), next(m), scratch(m);
  for (std::uint64_t s = 0; s < m; ++s) {
    idx.decode(s, states.data());
    double p = 1.0;
    double row[card];
    for (int i = 0; i < n; ++i) {
      model.initial_dist(i, theta, row);
      p *= row[states[i]];
    }
    dist[s] = p;
  }

  JointFilterResult res;
  std::vector<KahanSum> acc(m);
  for (int t = 1; t <= y.horizon; ++t) {
    // prediction: progressively expand each source state's product kernel
    for (auto& a : acc) a = KahanSum();
    std::vector<double> rows(static_cast<std::size_t>(n) * card);
    for (std::uint64_t s = 0; s < m; ++s) {
      if (dist[s] == 0.0) continue;
      idx.decode(s, states.data());
      for (int i = 0; i < n; ++i)
        transition_row<Model, double>(model, i, states, theta, &rows[i * card]);
      // expand most-significant component first so that component i lands
      // on digit i of the mixed-radix code
      std::uint64_t width = 1;
      scratch[0] = dist[s];
      for (int i = n - 1; i >= 0; --i) {
        for (std::uint64_t b = width; b-- > 0;)
          for (int x = card - 1; x >= 0; --x)
            next[b * card + x] = scratch[b] * rows[i * card + x];
        width *= card;
        std::swap(next, scratch);
      }
      for (std::uint64_t j = 0; j < m; ++j) acc[j].add(scratch[j]);
    }
    for (std::uint64_t j = 0; j < m; ++j) dist[j] = acc[j].value();

    // correction
    KahanSum norm;
    for (std::uint64_t s = 0; s < m; ++s) {
      idx.decode(s, states.data());
      double w = 1.0;
      double ev[card];
      for (int i = 0; i < n; ++i) {
        if (!observed[i]) continue;
        emission_or_missing(model, i, y.at(t, i), theta, ev);
        w *= ev[states[i]];
      }
      dist[s] *= w;
      norm.add(dist[s]);
    }
    double z = norm.value();
    res.increments.push_back(z);
    if (z <= 0.0) {
      res.loglik = kNegInf;
      res.dist = dist;
      return res;
    }
    for (auto& d : dist) d /= z;
    res.loglik += std::log(z);
  }
  res.dist = std::move(dist);
  return res;
}

/// log p(y | theta) by the joint forward algorithm.
template <typename Model>
double exact_loglik(const Model& model, std::span<const double> theta, const ObservationSet& y) {
  return exact_joint_filter(model, theta, y).loglik;
}

/// log p(y^K | theta): the forward algorithm with emissions outside the
/// block replaced by one.
template <typename Model>
double exact_component_marginal(const Model& model, std::span<const double> theta,
                                const ObservationSet& y, std::span<const int> block) {
  return exact_joint_filter(model, theta, y, block).loglik;
}

// --- path enumeration ----------------------------------------------------

/// Probability of a full latent path x_0..x_H (H = path.horizon).
template <typename Model>
double path_probability(const Model& model, std::span<const double> theta,
                        const Trajectory& path) {
  const int n = model.n_components();
  constexpr int card = Model::kStateCard;
  double p = 1.0;
  double row[card];
  for (int i = 0; i < n; ++i) {
    model.initial_dist(i, theta, row);
    p *= row[path.at(0, i)];
  }
  for (int t = 1; t <= path.horizon; ++t) {
    std::span<const int> prev = path.row(t - 1);
    for (int i = 0; i < n; ++i) {
      transition_row<Model, double>(model, i, prev, theta, row);
      p *= row[path.at(t, i)];
    }
  }
  return p;
}

/// Visits every joint path x_0..x_H; `fn(path)` is called for each.
template <typename Model, typename Fn>
void for_each_path(const Model& model, int horizon, Fn&& fn) {
  const int n = model.n_components();
  constexpr int card = Model::kStateCard;
  JointIndex idx(n, card);
  const std::uint64_t m = idx.size();
  double total_paths = std::pow(static_cast<double>(m), horizon + 1);
  if (total_paths > 1u << 24) throw CapacityError("path enumeration too large");

  Trajectory path;
  path.n_components = n;
  path.horizon = horizon;
  path.states.resize(static_cast<std::size_t>(horizon + 1) * n);
  std::vector<std::uint64_t> codes(horizon + 1, 0);
  while (true) {
    for (int t = 0; t <= horizon; ++t)
      idx.decode(codes[t], path.states.data() + static_cast<std::size_t>(t) * n);
    fn(static_cast<const Trajectory&>(path));
    int t = 0;
    for (; t <= horizon; ++t) {
      if (++codes[t] < m) break;
      codes[t] = 0;
    }
    if (t > horizon) break;
  }
}

/// log p(y) as the sum over every joint path of
/// p(x_0) prod p(x_t|x_{t-1}) p(y_t|x_t): the definition, with no recursion.
template <typename Model>
double enumerate_loglik(const Model& model, std::span<const double> theta,
                        const ObservationSet& y) {
  const int n = model.n_components();
  constexpr int card = Model::kStateCard;
  KahanSum total;
  for_each_path(model, y.horizon, [&](const Trajectory& path) {
    double p = path_probability(model, theta, path);
    double ev[card];
    for (int t = 1; t <= y.horizon; ++t)
      for (int i = 0; i < n; ++i) {
        emission_or_missing(model, i, y.at(t, i), theta, ev);
        p *= ev[path.at(t, i)];
      }
    total.add(p);
  });
  return std::log(total.value());
}

/// A pinned value in the path event {x_t^component = state}.
struct PathConstraint {
  int t;
  int component;
  int state;
};

/// Probability of the event defined by the constraints, paths running over
/// rows 0..horizon.
template <typename Model>
double enumerate_event_probability(const Model& model, std::span<const double> theta, int horizon,
                                   std::span<const PathConstraint> constraints) {
  KahanSum total;
  for_each_path(model, horizon, [&](const Trajectory& path) {
    for (const auto& c : constraints)
      if (path.at(c.t, c.component) != c.state) return;
    total.add(path_probability(model, theta, path));
  });
  return total.value();
}

/// Probability of a full sub-path on `components` over rows 0..horizon.
template <typename Model>
double enumerate_subpath_probability(const Model& model, std::span<const double> theta,
                                     std::span<const int> components,
                                     const std::vector<std::vector<int>>& sub_rows) {
  const int horizon = static_cast<int>(sub_rows.size()) - 1;
  std::vector<PathConstraint> cs;
  for (int t = 0; t <= horizon; ++t)
    for (std::size_t j = 0; j < components.size(); ++j)
      cs.push_back({t, components[j], sub_rows[t][j]});
  return enumerate_event_probability(model, theta, horizon, cs);
}

/// p(x^n path | complement path), two independent ways:
///  (a) the product of own transitions and feedback ratios, each ratio's
///      denominator mixing over p(x^n_{t-1} | complement rows 0..t-1)
///      obtained by enumeration;
///  (b) p(x) / p(x without n) by enumeration.
/// The two must agree to 1e-10; returns (a).
template <typename Model>
double exact_conditional_path_prob(const Model& model, std::span<const double> theta,
                                   std::span<const int> path_n,
                                   const Trajectory& full_path_with_n, int n) {
  const int horizon = full_path_with_n.horizon;
  const int nc = model.n_components();
  constexpr int card = Model::kStateCard;

  std::vector<int> rest;
  for (int i = 0; i < nc; ++i)
    if (i != n) rest.push_back(i);

  auto rest_constraints = [&](int up_to) {
    std::vector<PathConstraint> cs;
    for (int t = 0; t <= up_to; ++t)
      for (int j : rest) cs.push_back({t, j, full_path_with_n.at(t, j)});
    return cs;
  };

  double p_rest =
      enumerate_event_probability(model, theta, horizon, rest_constraints(horizon));
  if (p_rest <= 0.0)
    throw NumericError("exact_conditional_path_prob: conditioning event has probability 0");

  // (b) joint / marginal
  double by_enumeration = path_probability(model, theta, full_path_with_n) / p_rest;

  // (a) own-transition product with feedback ratios
  double row[card];
  model.initial_dist(n, theta, row);
  double by_product = row[path_n[0]];
  std::vector<int> prev(nc);
  for (int t = 1; t <= horizon; ++t) {
    for (int i = 0; i < nc; ++i) prev[i] = full_path_with_n.at(t - 1, i);
    transition_row<Model, double>(model, n, prev, theta, row);
    by_product *= row[path_n[t]];

    double num = 1.0;
    for (int j : rest) {
      double r[card];
      transition_row<Model, double>(model, j, prev, theta, r);
      num *= r[full_path_with_n.at(t, j)];
    }
    // mixing weights p(x^n_{t-1} = s | complement rows 0..t-1), by enumeration
    double weights[card];
    double wsum = 0.0;
    for (int s = 0; s < card; ++s) {
      std::vector<PathConstraint> cs = rest_constraints(t - 1);
      cs.push_back({t - 1, n, s});
      weights[s] = enumerate_event_probability(model, theta, t - 1, cs);
      wsum += weights[s];
    }
    KahanSum den;
    for (int s = 0; s < card; ++s) {
      if (weights[s] == 0.0) continue;
      prev[n] = s;
      double contrib = 1.0;
      for (int j : rest) {
        double r[card];
        transition_row<Model, double>(model, j, prev, theta, r);
        contrib *= r[full_path_with_n.at(t, j)];
      }
      den.add(contrib * (weights[s] / wsum));
    }
    prev[n] = full_path_with_n.at(t - 1, n);
    by_product *= num / den.value();
  }

  if (std::fabs(by_product - by_enumeration) >
      1e-10 * std::max(1.0, std::fabs(by_enumeration)))
    throw NumericError("exact_conditional_path_prob: product and enumeration disagree");
  return by_product;
}

}  // namespace simbacl
