#include <catch2/catch_amalgamated.hpp>

#include "simbacl/params.hpp"

using namespace simbacl;

namespace {
ParamLayout demo_layout() {
  return ParamLayout({{"beta", 2, Transform::identity},
                      {"q", 2, Transform::logit},
                      {"rate", 1, Transform::log}});
}
}  // namespace

TEST_CASE("layout offsets and names") {
  ParamLayout l = demo_layout();
  REQUIRE(l.dim() == 5);
  REQUIRE(l.offset("q") == 2);
  REQUIRE(l.block_size("q") == 2);
  REQUIRE(l.coord_name(3) == "q[1]");
  REQUIRE(l.coord_name(4) == "rate");
  REQUIRE(l.transform_at(4) == Transform::log);
  REQUIRE_THROWS_AS(l.offset("nope"), ConfigError);
}

TEST_CASE("natural and unconstrained scales round-trip") {
  ParamLayout l = demo_layout();
  std::vector<double> nat{-1.0, 2.0, 0.3, 0.9, 0.05};
  auto u = to_unconstrained(l, nat);
  auto back = to_natural(l, u);
  for (std::size_t i = 0; i < nat.size(); ++i)
    REQUIRE(back[i] == Catch::Approx(nat[i]).epsilon(1e-12));
}

TEST_CASE("boundary probabilities map to infinite coordinates and back") {
  ParamLayout l = demo_layout();
  std::vector<double> nat{0.0, 0.0, 0.0, 1.0, 1.0};
  auto u = to_unconstrained(l, nat);
  REQUIRE(u[2] == -std::numeric_limits<double>::infinity());
  REQUIRE(u[3] == std::numeric_limits<double>::infinity());
  auto back = to_natural(l, u);
  REQUIRE(back[2] == 0.0);
  REQUIRE(back[3] == 1.0);
}

TEST_CASE("invalid natural values are rejected") {
  ParamLayout l = demo_layout();
  REQUIRE_THROWS_AS(to_unconstrained(l, std::vector<double>{0, 0, -0.1, 0.5, 1.0}), ConfigError);
  REQUIRE_THROWS_AS(to_unconstrained(l, std::vector<double>{0, 0, 1.2, 0.5, 1.0}), ConfigError);
  REQUIRE_THROWS_AS(to_unconstrained(l, std::vector<double>{0, 0, 0.5, 0.5, -2.0}), ConfigError);
  REQUIRE_THROWS_AS(to_unconstrained(l, std::vector<double>{0, 0, 0.5, 0.5}), ConfigError);
}

TEST_CASE("gradient seeding activates only requested coordinates") {
  std::vector<double> theta{1.0, 2.0, 3.0};
  std::vector<std::size_t> active{2, 0};
  auto seeded = seed_gradient(theta, active);
  REQUIRE(seeded[2].partial(0) == 1.0);
  REQUIRE(seeded[0].partial(1) == 1.0);
  REQUIRE(seeded[1].n_partials() == 0);
}
