#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "simbacl/diff.hpp"
#include "toy_models.hpp"

using namespace simbacl;
using namespace simbacl::test;

namespace {

ObservationSet all_detected(int n, int horizon) {
  ObservationSet y;
  y.n_components = n;
  y.horizon = horizon;
  y.obs.assign(static_cast<std::size_t>(horizon) * n, 1);
  return y;
}

ObservationSet random_obs(int n, int horizon, Rng rng) {
  ObservationSet y = all_detected(n, horizon);
  for (auto& v : y.obs) v = static_cast<int>(rng.next_u64() % 2);
  return y;
}

}  // namespace

TEST_CASE("emission-only model has the closed-form score") {
  const int n = 3, horizon = 4;
  EmissionOnlyModel m(n);
  std::vector<double> th{0.4};
  ObservationSet y = all_detected(n, horizon);
  GradOptions opt;
  opt.simba = {5, Variant::no_feedback, 60, 1};
  GradientReport rep =
      grad_composite(m, th, y, Partition::singletons(n, 2), opt);
  // every increment is sigmoid(theta): d/dtheta log = 1 - sigmoid(theta), NT times
  double s = sigmoid(0.4);
  REQUIRE(rep.value == Catch::Approx(n * horizon * std::log(s)).epsilon(1e-12));
  REQUIRE(rep.gradient[0] == Catch::Approx(n * horizon * (1.0 - s)).epsilon(1e-12));
}

TEST_CASE("parameter-free model has zero gradient") {
  ConstantModel m(3);
  std::vector<double> th{1.23};
  ObservationSet y = random_obs(3, 3, Rng(61));
  GradOptions opt;
  opt.simba = {4, Variant::feedback, 62, 1};
  GradientReport rep = grad_composite(m, th, y, Partition::singletons(3, 2), opt);
  REQUIRE(rep.gradient[0] == 0.0);
}

TEST_CASE("finite differences of simple functions") {
  auto square = [](std::span<const double> t) { return t[0] * t[0]; };
  std::vector<double> at{3.0};
  auto g = fd_gradient(square, at, 1e-4);
  REQUIRE(g[0] == Catch::Approx(6.0).margin(1e-7));

  auto constant = [](std::span<const double>) { return 2.5; };
  auto gz = fd_gradient(constant, std::vector<double>{1.0, -1.0}, 1e-4);
  REQUIRE(gz[0] == 0.0);
  REQUIRE(gz[1] == 0.0);
  REQUIRE_THROWS_AS(fd_gradient(square, at, 0.0), ConfigError);
}

TEST_CASE("gradient matches central finite differences on a sis toy") {
  SisModel m = sis_model(3, 63);
  auto th = theta_u(m, sis_baseline_natural());
  ObservationSet y = random_obs(3, 4, Rng(64));
  Partition part = Partition::singletons(3, 2);
  SimbaOptions simba{20, Variant::no_feedback, 65, 1};

  GradOptions opt;
  opt.simba = simba;
  GradientReport rep = grad_composite(m, th, y, part, opt);

  auto objective = [&](std::span<const double> t) {
    return value_of(simba_loglik(m, t, y, part, simba).composite);
  };
  auto fd = fd_gradient(objective, th, 1e-5);

  double scale = 1.0;
  for (double g : fd) scale = std::max(scale, std::fabs(g));
  for (std::size_t i = 0; i < fd.size(); ++i)
    REQUIRE(std::fabs(rep.gradient[i] - fd[i]) < 1e-5 * scale);
}

TEST_CASE("gradient matches finite differences on a seir toy with feedback") {
  SeirModel m = seir_model(3, 66);
  auto th = theta_u(m, seir_baseline_natural(0.05, 0.05));  // interior q
  ObservationSet y = random_obs(3, 3, Rng(67));
  Partition part = Partition::singletons(3, 4);
  SimbaOptions simba{10, Variant::feedback, 68, 1};

  GradOptions opt;
  opt.simba = simba;
  GradientReport rep = grad_composite(m, th, y, part, opt);
  auto objective = [&](std::span<const double> t) {
    return value_of(simba_loglik(m, t, y, part, simba).composite);
  };
  auto fd = fd_gradient(objective, th, 1e-5);
  double scale = 1.0;
  for (double g : fd) scale = std::max(scale, std::fabs(g));
  for (std::size_t i = 0; i < fd.size(); ++i)
    REQUIRE(std::fabs(rep.gradient[i] - fd[i]) < 1e-5 * scale);
}

TEST_CASE("hessian of a quadratic is exact") {
  // pushing theta' A theta through second-order duals directly
  const std::size_t d = 2;
  double a[2][2] = {{1.5, -0.25}, {-0.25, 0.75}};
  std::vector<double> at{0.7, -1.1};
  std::vector<Dual2Scalar> x = seed_hessian(at, all_coords(d));
  Dual2Scalar f(0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) f += x[i] * Dual2Scalar(Dual<double>(a[i][j])) * x[j];
  auto h = hessian_of(f, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      REQUIRE(h[i * d + j] == Catch::Approx(2.0 * a[i][j]).margin(1e-12));
}

TEST_CASE("composite hessian agrees with finite differences of the gradient") {
  SisModel m = sis_model(2, 69);
  auto th = theta_u(m, sis_baseline_natural());
  ObservationSet y = random_obs(2, 3, Rng(70));
  Partition part = Partition::singletons(2, 2);
  // restrict to the infection coefficients to keep the dual nesting small
  std::vector<std::size_t> active{2, 3, 8};

  GradOptions opt;
  opt.simba = {15, Variant::no_feedback, 71, 1};
  opt.active = active;
  GradientReport dual_rep = hessian_composite(m, th, y, part, opt);
  GradientReport fd_rep = hessian_composite(m, th, y, part, opt, /*fd_fallback=*/true, 1e-5);

  double scale = 1.0;
  for (double h : fd_rep.hessian) scale = std::max(scale, std::fabs(h));
  for (std::size_t i = 0; i < dual_rep.hessian.size(); ++i)
    REQUIRE(std::fabs(dual_rep.hessian[i] - fd_rep.hessian[i]) < 1e-4 * scale);

  // symmetry of the dual-computed hessian
  const std::size_t d = active.size();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      REQUIRE(dual_rep.hessian[i * d + j] == dual_rep.hessian[j * d + i]);
}

TEST_CASE("gradient evaluations are deterministic given the seed") {
  SisModel m = sis_model(3, 72);
  auto th = theta_u(m, sis_baseline_natural());
  ObservationSet y = random_obs(3, 3, Rng(73));
  Partition part = Partition::singletons(3, 2);
  GradOptions opt;
  opt.simba = {8, Variant::feedback, 74, 2};
  opt.per_block = true;
  GradientReport a = grad_composite(m, th, y, part, opt);
  GradientReport b = grad_composite(m, th, y, part, opt);
  REQUIRE(a.value == b.value);
  REQUIRE(a.gradient == b.gradient);
  REQUIRE(a.block_gradients == b.block_gradients);
}

TEST_CASE("zero likelihood makes the gradient undefined") {
  SisModel m = sis_model(2, 75);
  auto nat = sis_baseline_natural();
  nat[6] = nat[7] = 1.0;
  auto th = theta_u(m, nat);
  ObservationSet y;
  y.n_components = 2;
  y.horizon = 2;
  y.obs.assign(4, 0);
  GradOptions opt;
  opt.simba = {3, Variant::no_feedback, 76, 1};
  REQUIRE_THROWS_AS(grad_composite(m, th, y, Partition::singletons(2, 2), opt), NumericError);
}
