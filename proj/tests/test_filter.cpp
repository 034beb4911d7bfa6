#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "helpers.hpp"
#include "simbacl/exact.hpp"
#include "simbacl/filter.hpp"
#include "toy_models.hpp"

using namespace simbacl;
using namespace simbacl::test;

namespace {

ObservationSet random_obs(int n, int horizon, Rng rng) {
  ObservationSet y;
  y.n_components = n;
  y.horizon = horizon;
  y.obs.resize(static_cast<std::size_t>(horizon) * n);
  for (auto& v : y.obs) v = static_cast<int>(rng.next_u64() % 2);
  return y;
}

/// Enumerates block paths of the conditional likelihood given the
/// complement: init * kernels * emissions, plus the feedback ratios when
/// requested. Written against the defining sums, independent of the filter.
template <typename Model>
double brute_conditional(const Model& model, std::span<const double> th, const ObservationSet& y,
                         const Trajectory& traj, std::span<const int> block, bool with_feedback) {
  const int horizon = y.horizon;
  const int k = static_cast<int>(block.size());
  constexpr int card = Model::kStateCard;
  const int n = model.n_components();

  std::vector<int> rest;
  for (int c = 0; c < n; ++c)
    if (std::find(block.begin(), block.end(), c) == block.end()) rest.push_back(c);

  // feedback denominators p(traj_t rest | rest rows 0..t-1), by enumeration
  std::vector<double> den(horizon, 1.0);
  if (with_feedback && !rest.empty()) {
    auto rest_prob_up_to = [&](int up_to) {
      std::vector<PathConstraint> cs;
      for (int t = 0; t <= up_to; ++t)
        for (int c : rest) cs.push_back({t, c, traj.at(t, c)});
      return enumerate_event_probability(model, th, up_to, cs);
    };
    for (int t = 1; t < horizon; ++t) den[t] = rest_prob_up_to(t) / rest_prob_up_to(t - 1);
  }

  std::size_t m = 1;
  for (int j = 0; j < k; ++j) m *= card;
  std::size_t n_paths = 1;
  for (int t = 0; t <= horizon; ++t) n_paths *= m;

  std::vector<int> full(n);
  double row[card], ev[card];
  KahanSum total;
  for (std::size_t code = 0; code < n_paths; ++code) {
    // decode the block path
    std::vector<std::vector<int>> bp(horizon + 1, std::vector<int>(k));
    std::size_t c = code;
    for (int t = 0; t <= horizon; ++t)
      for (int j = 0; j < k; ++j) {
        bp[t][j] = static_cast<int>(c % card);
        c /= card;
      }
    double p = 1.0;
    for (int j = 0; j < k; ++j) {
      double init[card];
      model.initial_dist(block[j], th, init);
      p *= init[bp[0][j]];
    }
    for (int t = 1; t <= horizon && p > 0.0; ++t) {
      for (int cc = 0; cc < n; ++cc) full[cc] = traj.at(t - 1, cc);
      for (int j = 0; j < k; ++j) full[block[j]] = bp[t - 1][j];
      for (int j = 0; j < k; ++j) {
        transition_row<Model, double>(model, block[j], std::span<const int>(full), th, row);
        p *= row[bp[t][j]];
      }
      for (int j = 0; j < k; ++j) {
        emission_or_missing(model, block[j], y.at(t, block[j]), th, ev);
        p *= ev[bp[t][j]];
      }
      if (with_feedback && t < horizon && !rest.empty()) {
        double num = 1.0;
        for (int cc : rest) {
          transition_row<Model, double>(model, cc, std::span<const int>(full), th, row);
          num *= row[traj.at(t, cc)];
        }
        p *= num / den[t];
      }
    }
    total.add(p);
  }
  return std::log(total.value());
}

}  // namespace

TEST_CASE("no-feedback filter equals the exact per-component marginal when independent") {
  IndependentModel m(3);
  std::vector<double> nat{0.2, 0.7, 0.6, 0.5, 0.3};
  auto th = to_unconstrained(m.layout(), nat);
  ObservationSet y = random_obs(3, 4, Rng(31));
  Trajectory traj = sample_trajectory(m, th, 4, Rng(32));
  for (int c = 0; c < 3; ++c) {
    std::vector<int> block{c};
    double f = filter_without_feedback(m, std::span<const double>(th), y, traj, block);
    REQUIRE(f == Catch::Approx(exact_component_marginal(m, th, y, block)).margin(1e-10));
  }
}

TEST_CASE("likelihood is the product of the step increments") {
  EmissionOnlyModel m(1);
  std::vector<double> th{0.0};  // sigmoid(0) = 0.5 per step
  ObservationSet y = random_obs(1, 2, Rng(33));
  Trajectory traj = sample_trajectory(m, th, 2, Rng(34));
  std::vector<int> block{0};
  double f = filter_without_feedback(m, std::span<const double>(th), y, traj, block);
  REQUIRE(f == Catch::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("no-feedback filter matches path enumeration") {
  SisModel m = sis_model(3, 35);
  auto th = theta_u(m, sis_baseline_natural());
  for (int rep = 0; rep < 5; ++rep) {
    ObservationSet y = random_obs(3, 4, Rng(300 + rep));
    Trajectory traj = sample_trajectory(m, th, 4, Rng(400 + rep));
    for (std::vector<int> block : {std::vector<int>{0}, std::vector<int>{1, 2}}) {
      double f = filter_without_feedback(m, std::span<const double>(th), y, traj, block);
      double b = brute_conditional(m, th, y, traj, block, false);
      REQUIRE(f == Catch::Approx(b).margin(1e-10));
    }
  }
}

TEST_CASE("feedback filter matches path enumeration") {
  SisModel m = sis_model(2, 36);
  auto th = theta_u(m, sis_baseline_natural());
  for (int rep = 0; rep < 5; ++rep) {
    ObservationSet y = random_obs(2, 3, Rng(500 + rep));
    Trajectory traj = sample_trajectory(m, th, 3, Rng(600 + rep));
    for (int c = 0; c < 2; ++c) {
      std::vector<int> block{c};
      double f = filter_with_feedback(m, std::span<const double>(th), y, traj, block);
      double b = brute_conditional(m, th, y, traj, block, true);
      REQUIRE(f == Catch::Approx(b).margin(1e-10));
    }
  }
}

TEST_CASE("feedback factors vanish for independent components") {
  IndependentModel m(4);
  std::vector<double> nat{0.3, 0.6, 0.55, 0.7, 0.2};
  auto th = to_unconstrained(m.layout(), nat);
  for (int rep = 0; rep < 20; ++rep) {
    ObservationSet y = random_obs(4, 3, Rng(700 + rep));
    Trajectory traj = sample_trajectory(m, th, 3, Rng(800 + rep));
    for (int c = 0; c < 4; ++c) {
      std::vector<int> block{c};
      double with = filter_with_feedback(m, std::span<const double>(th), y, traj, block);
      double without = filter_without_feedback(m, std::span<const double>(th), y, traj, block);
      REQUIRE(std::fabs(with - without) <= 1e-12);
    }
  }
}

TEST_CASE("exhaustive complement averaging of the feedback filter recovers the marginal") {
  SisModel m = sis_model(2, 37);
  auto th = theta_u(m, sis_baseline_natural());
  const int horizon = 3;
  ObservationSet y = random_obs(2, horizon, Rng(38));
  std::vector<int> block{0};
  std::vector<int> rest{1};

  KahanSum mean;
  const int n_rest_paths = 1 << horizon;  // rows 0..horizon-1 of one binary component
  for (int code = 0; code < n_rest_paths; ++code) {
    Trajectory traj;
    traj.n_components = 2;
    traj.horizon = horizon;
    traj.states.assign(static_cast<std::size_t>(horizon + 1) * 2, 0);
    std::vector<std::vector<int>> rest_rows(horizon, std::vector<int>(1));
    for (int t = 0; t < horizon; ++t) {
      traj.at(t, 1) = (code >> t) & 1;
      rest_rows[t][0] = traj.at(t, 1);
    }
    traj.at(horizon, 1) = traj.at(horizon - 1, 1);  // unused by the filter
    double weight = enumerate_subpath_probability(m, th, rest, rest_rows);
    double val = filter_with_feedback(m, std::span<const double>(th), y, traj, block);
    mean.add(weight * std::exp(val));
  }
  double exact = exact_component_marginal(m, th, y, block);
  REQUIRE(std::log(mean.value()) == Catch::Approx(exact).margin(1e-8));
}

TEST_CASE("single whole-system block with an empty complement is the exact filter") {
  SisModel m = sis_model(3, 39);
  auto th = theta_u(m, sis_baseline_natural());
  ObservationSet y = random_obs(3, 3, Rng(40));
  Partition whole(3, {{0, 1, 2}}, SisModel::kStateCard);
  for (Variant v : {Variant::no_feedback, Variant::feedback}) {
    SimbaOptions opt;
    opt.n_sims = 1;
    opt.variant = v;
    opt.seed = 41;
    auto est = simba_loglik(m, std::span<const double>(th), y, whole, opt);
    REQUIRE(value_of(est.composite) == Catch::Approx(exact_loglik(m, th, y)).margin(1e-10));
  }
}

TEST_CASE("deterministic dynamics make the estimate independent of P") {
  CycleModel m(3);
  std::vector<double> th{0.0, 0.0};
  ObservationSet y = random_obs(3, 4, Rng(42));
  Partition part = Partition::singletons(3, CycleModel::kStateCard);
  SimbaOptions a{1, Variant::no_feedback, 43, 1};
  SimbaOptions b{7, Variant::no_feedback, 44, 1};
  auto ea = simba_loglik(m, std::span<const double>(th), y, part, a);
  auto eb = simba_loglik(m, std::span<const double>(th), y, part, b);
  REQUIRE(value_of(ea.composite) == Catch::Approx(value_of(eb.composite)).margin(1e-12));
}

TEST_CASE("monte carlo composite matches the exact marginal product on a toy") {
  SisModel m = sis_model(3, 45);
  auto th = theta_u(m, sis_baseline_natural());
  ObservationSet y = random_obs(3, 4, Rng(46));
  Partition part = Partition::singletons(3, SisModel::kStateCard);
  SimbaOptions opt{10000, Variant::feedback, 47, 2};
  auto est = simba_loglik(m, std::span<const double>(th), y, part, opt);

  double exact_sum = 0.0, mc_sum = 0.0, se_sq = 0.0;
  for (std::size_t k = 0; k < part.n_blocks(); ++k) {
    std::vector<int> block{static_cast<int>(k)};
    exact_sum += exact_component_marginal(m, th, y, block);
    mc_sum += value_of(est.block_log_marginal[k]);
    // delta-method standard error of log mean(exp v)
    std::vector<double> v(opt.n_sims);
    for (int i = 0; i < opt.n_sims; ++i) v[i] = std::exp(est.per_sim(i, k, part.n_blocks()));
    double mean = sample_mean(v);
    double se = sample_sd(v) / std::sqrt(static_cast<double>(opt.n_sims));
    se_sq += (se / mean) * (se / mean);
  }
  REQUIRE(std::fabs(mc_sum - exact_sum) <= 3.0 * std::sqrt(se_sq));
  REQUIRE(est.diag.max_belief_sum_err < 1e-9);
}

TEST_CASE("composite likelihood is partition-invariant when blocks are independent") {
  IndependentModel m(4);
  std::vector<double> nat{0.3, 0.6, 0.55, 0.7, 0.2};
  auto th = to_unconstrained(m.layout(), nat);
  ObservationSet y = random_obs(4, 3, Rng(48));
  SimbaOptions opt{5, Variant::no_feedback, 49, 1};
  auto singles =
      simba_loglik(m, std::span<const double>(th), y, Partition::singletons(4, 2), opt);
  auto pairs = simba_loglik(m, std::span<const double>(th), y, Partition::pairs(4, 2), opt);
  REQUIRE(value_of(singles.composite) == Catch::Approx(value_of(pairs.composite)).margin(1e-9));
}

TEST_CASE("impossible observations produce a flagged -inf composite") {
  SisModel m = sis_model(2, 50);
  auto nat = sis_baseline_natural();
  nat[6] = nat[7] = 1.0;  // detection certain: y = 0 has probability zero
  auto th = theta_u(m, nat);
  ObservationSet y;
  y.n_components = 2;
  y.horizon = 2;
  y.obs.assign(4, 0);
  SimbaOptions opt{3, Variant::no_feedback, 51, 1};
  auto est = simba_loglik(m, std::span<const double>(th), y, Partition::singletons(2, 2), opt);
  REQUIRE(value_of(est.composite) == kNegInf);
  REQUIRE(est.all_zero_blocks.size() == 2);
  opt.throw_on_all_zero = true;
  REQUIRE_THROWS_AS(simba_loglik(m, std::span<const double>(th), y,
                                 Partition::singletons(2, 2), opt),
                    NumericError);
}

TEST_CASE("per-simulation conditional likelihoods are proper over observation space") {
  SisModel m = sis_model(2, 52);
  auto th = theta_u(m, sis_baseline_natural());
  const int horizon = 2;
  Trajectory traj = sample_trajectory(m, th, horizon, Rng(53));
  std::vector<int> block{0};
  for (bool feedback : {false, true}) {
    KahanSum total;
    for (int code = 0; code < (1 << horizon); ++code) {
      ObservationSet y;
      y.n_components = 2;
      y.horizon = horizon;
      y.obs.assign(horizon * 2, 0);
      for (int t = 1; t <= horizon; ++t) y.at(t, 0) = (code >> (t - 1)) & 1;
      double v = feedback
                     ? filter_with_feedback(m, std::span<const double>(th), y, traj, block)
                     : filter_without_feedback(m, std::span<const double>(th), y, traj, block);
      total.add(std::exp(v));
    }
    REQUIRE(total.value() == Catch::Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("empirical divergence estimator") {
  std::vector<double> p{std::log(0.5), std::log(0.25)};
  REQUIRE(empirical_kl(p, p) == 0.0);
  std::vector<double> q{std::log(0.25), std::log(0.5)};
  REQUIRE(empirical_kl(p, q) == Catch::Approx(0.173287).epsilon(1e-5));
  REQUIRE(empirical_kl(p, q) ==
          Catch::Approx(0.5 * std::log(2.0) + 0.25 * std::log(0.5)).epsilon(1e-12));
  KlEstimate loo = empirical_kl_loo(p, q);
  REQUIRE(loo.point == Catch::Approx(0.173287).epsilon(1e-5));
  REQUIRE(loo.loo_sd > 0.0);
  REQUIRE_THROWS_AS(empirical_kl(p, std::vector<double>{0.0}), DataError);
}

TEST_CASE("divergence bound is zero without interaction or without variance") {
  SECTION("independent components") {
    IndependentModel m(5);
    std::vector<double> nat{0.3, 0.6, 0.55, 0.7, 0.2};
    auto th = to_unconstrained(m.layout(), nat);
    std::vector<int> block{1};
    REQUIRE(theorem1_bound(m, th, 4, block, 10, 54) == 0.0);
  }
  SECTION("deterministic block state") {
    CycleModel m(4);
    std::vector<double> th{0.0, 0.0};
    std::vector<int> block{2};
    REQUIRE(theorem1_bound(m, th, 4, block, 10, 55) == 0.0);
  }
}

TEST_CASE("divergence bound dominates the empirical divergence on a sis toy") {
  const int n = 6, horizon = 4;
  SisModel m = sis_model(n, 56, true);
  auto th = theta_u(m, sis_baseline_natural());
  const int n_eval = 30, n_sims = 200;

  Partition part = Partition::singletons(n, 2);
  std::vector<std::vector<double>> lp(part.n_blocks()), lq(part.n_blocks());
  for (int e = 0; e < n_eval; ++e) {
    Rng data_rng = Rng(57).derive("data", e);
    Trajectory traj = sample_trajectory(m, th, horizon, data_rng.derive("x"));
    ObservationSet y = sample_observations(m, th, traj, data_rng.derive("y"));
    SimbaOptions opt{n_sims, Variant::feedback, Rng(58).derive("eval", e).key(), 2};
    auto est_f = simba_loglik(m, std::span<const double>(th), y, part, opt);
    opt.variant = Variant::no_feedback;
    auto est_nf = simba_loglik(m, std::span<const double>(th), y, part, opt);
    for (std::size_t k = 0; k < part.n_blocks(); ++k) {
      lp[k].push_back(value_of(est_f.block_log_marginal[k]));
      lq[k].push_back(value_of(est_nf.block_log_marginal[k]));
    }
  }
  for (std::size_t k = 0; k < part.n_blocks(); ++k) {
    double kl = empirical_kl(lp[k], lq[k]);
    double bound = theorem1_bound(m, th, horizon, part.block(k), 200, 59);
    REQUIRE(bound >= kl);
  }
}
