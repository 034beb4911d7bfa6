#include <catch2/catch_amalgamated.hpp>

#include "simbacl/math.hpp"

using namespace simbacl;

TEST_CASE("kahan summation keeps cancellation error small") {
  KahanSum acc;
  for (int i = 0; i < 1000000; ++i) acc.add(0.1);
  REQUIRE(acc.value() == Catch::Approx(100000.0).epsilon(1e-14));
}

TEST_CASE("logsumexp handles extremes") {
  std::vector<double> v{-1000.0, -1000.0};
  REQUIRE(logsumexp(v) == Catch::Approx(-1000.0 + std::log(2.0)));
  std::vector<double> w{kNegInf, 0.0};
  REQUIRE(logsumexp(w) == Catch::Approx(0.0).margin(1e-15));
  std::vector<double> z{kNegInf, kNegInf};
  REQUIRE(logsumexp(z) == kNegInf);
  REQUIRE(log_mean_exp(std::vector<double>{std::log(0.5), std::log(0.25)}) ==
          Catch::Approx(std::log(0.375)));
}

TEST_CASE("chi-square quantiles match tabulated values") {
  REQUIRE(chi2_quantile(2, 0.95) == Catch::Approx(5.99146).epsilon(1e-4));
  REQUIRE(chi2_quantile(1, 0.95) == Catch::Approx(3.84146).epsilon(1e-4));
  REQUIRE(chi2_quantile(9, 0.95) == Catch::Approx(16.9190).epsilon(1e-4));
  REQUIRE(normal_two_sided_quantile(0.95) == Catch::Approx(1.95996).epsilon(1e-4));

  for (double df : {1.0, 2.0, 5.0, 9.0})
    for (double p : {0.05, 0.5, 0.95, 0.99})
      REQUIRE(chi2_cdf(chi2_quantile(df, p), df) == Catch::Approx(p).margin(1e-10));
}

TEST_CASE("sample statistics") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  REQUIRE(sample_mean(v) == Catch::Approx(2.5));
  REQUIRE(sample_sd(v) == Catch::Approx(std::sqrt(5.0 / 3.0)));
}
