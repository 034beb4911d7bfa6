#include <catch2/catch_amalgamated.hpp>

#include <memory>

#include "simbacl/dual.hpp"
#include "simbacl/math.hpp"
#include "simbacl/rng.hpp"

using namespace simbacl;

namespace {

// Tiny expression AST with analytic derivatives, independent of the dual
// arithmetic it is used to check.
struct Expr {
  enum Kind { kConst, kVar, kAdd, kSub, kMul, kDiv, kExp, kLog, kSigmoid, kSqrt, kPowC } kind;
  double c = 0.0;
  int var = 0;
  double pow_exponent = 1.0;
  std::shared_ptr<Expr> a, b;

  double eval(std::span<const double> x) const {
    switch (kind) {
      case kConst: return c;
      case kVar: return x[var];
      case kAdd: return a->eval(x) + b->eval(x);
      case kSub: return a->eval(x) - b->eval(x);
      case kMul: return a->eval(x) * b->eval(x);
      case kDiv: return a->eval(x) / b->eval(x);
      case kExp: return std::exp(a->eval(x));
      case kLog: return std::log(a->eval(x));
      case kSigmoid: return 1.0 / (1.0 + std::exp(-a->eval(x)));
      case kSqrt: return std::sqrt(a->eval(x));
      case kPowC: return std::pow(a->eval(x), pow_exponent);
    }
    return 0.0;
  }

  double deriv(std::span<const double> x, int i) const {
    switch (kind) {
      case kConst: return 0.0;
      case kVar: return var == i ? 1.0 : 0.0;
      case kAdd: return a->deriv(x, i) + b->deriv(x, i);
      case kSub: return a->deriv(x, i) - b->deriv(x, i);
      case kMul: return a->deriv(x, i) * b->eval(x) + a->eval(x) * b->deriv(x, i);
      case kDiv: {
        double bv = b->eval(x);
        return (a->deriv(x, i) * bv - a->eval(x) * b->deriv(x, i)) / (bv * bv);
      }
      case kExp: return std::exp(a->eval(x)) * a->deriv(x, i);
      case kLog: return a->deriv(x, i) / a->eval(x);
      case kSigmoid: {
        double s = 1.0 / (1.0 + std::exp(-a->eval(x)));
        return s * (1.0 - s) * a->deriv(x, i);
      }
      case kSqrt: return a->deriv(x, i) / (2.0 * std::sqrt(a->eval(x)));
      case kPowC:
        return pow_exponent * std::pow(a->eval(x), pow_exponent - 1.0) * a->deriv(x, i);
    }
    return 0.0;
  }

  template <typename S>
  S eval_dual(std::span<const S> x) const {
    switch (kind) {
      case kConst: return S(c);
      case kVar: return x[var];
      case kAdd: return a->eval_dual(x) + b->eval_dual(x);
      case kSub: return a->eval_dual(x) - b->eval_dual(x);
      case kMul: return a->eval_dual(x) * b->eval_dual(x);
      case kDiv: return a->eval_dual(x) / b->eval_dual(x);
      case kExp: return exp(a->eval_dual(x));
      case kLog: return log(a->eval_dual(x));
      case kSigmoid: return sigmoid(a->eval_dual(x));
      case kSqrt: return sqrt(a->eval_dual(x));
      case kPowC: return pow(a->eval_dual(x), pow_exponent);
    }
    return S(0.0);
  }
};

using ExprPtr = std::shared_ptr<Expr>;

ExprPtr make(Expr e) { return std::make_shared<Expr>(std::move(e)); }

// x -> x^2 + 1/2, a strictly positive wrapper for log/sqrt/div arguments
ExprPtr positive(ExprPtr e) {
  ExprPtr sq = make({Expr::kMul, 0, 0, 1, e, e});
  return make({Expr::kAdd, 0.5, 0, 1, sq, make({Expr::kConst, 0.5, 0, 1, nullptr, nullptr})});
}

ExprPtr random_expr(Rng& r, int depth, int n_vars) {
  if (depth == 0) {
    if (r.uniform() < 0.3)
      return make({Expr::kConst, 2.0 * r.uniform() - 1.0, 0, 1, nullptr, nullptr});
    return make({Expr::kVar, 0, static_cast<int>(r.next_u64() % n_vars), 1, nullptr, nullptr});
  }
  switch (r.next_u64() % 9) {
    case 0: return make({Expr::kAdd, 0, 0, 1, random_expr(r, depth - 1, n_vars),
                         random_expr(r, depth - 1, n_vars)});
    case 1: return make({Expr::kSub, 0, 0, 1, random_expr(r, depth - 1, n_vars),
                         random_expr(r, depth - 1, n_vars)});
    case 2: return make({Expr::kMul, 0, 0, 1, random_expr(r, depth - 1, n_vars),
                         random_expr(r, depth - 1, n_vars)});
    case 3: return make({Expr::kDiv, 0, 0, 1, random_expr(r, depth - 1, n_vars),
                         positive(random_expr(r, depth - 1, n_vars))});
    case 4: return make({Expr::kSigmoid, 0, 0, 1, random_expr(r, depth - 1, n_vars), nullptr});
    case 5: return make({Expr::kLog, 0, 0, 1, positive(random_expr(r, depth - 1, n_vars)),
                         nullptr});
    case 6: return make({Expr::kSqrt, 0, 0, 1, positive(random_expr(r, depth - 1, n_vars)),
                         nullptr});
    case 7: return make({Expr::kPowC, 0, 0, 1.0 + 2.0 * r.uniform(),
                         positive(random_expr(r, depth - 1, n_vars)), nullptr});
    default: {
      // keep exp arguments bounded via a sigmoid
      ExprPtr squashed = make({Expr::kSigmoid, 0, 0, 1, random_expr(r, depth - 1, n_vars),
                               nullptr});
      return make({Expr::kExp, 0, 0, 1, squashed, nullptr});
    }
  }
}

}  // namespace

TEST_CASE("dual partials equal symbolic derivatives on random expression trees") {
  const int n_vars = 3;
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Rng tr = rng.derive("tree", trial);
    ExprPtr e = random_expr(tr, 3, n_vars);
    std::vector<double> x(n_vars);
    for (auto& v : x) v = 2.0 * tr.uniform() - 1.0;
    std::vector<DualScalar> xd(n_vars);
    for (int i = 0; i < n_vars; ++i) xd[i] = DualScalar::variable(x[i], i, n_vars);
    DualScalar y = e->eval_dual(std::span<const DualScalar>(xd));
    if (!std::isfinite(value_of(y))) continue;
    REQUIRE(value_of(y) == Catch::Approx(e->eval(x)).epsilon(1e-12));
    for (int i = 0; i < n_vars; ++i) {
      double exact = e->deriv(x, i);
      if (!std::isfinite(exact)) continue;
      REQUIRE(y.partial(i) ==
              Catch::Approx(exact).epsilon(1e-12).margin(1e-12 * std::max(1.0, std::fabs(exact))));
      ++checked;
    }
  }
  REQUIRE(checked > 2000);
}

TEST_CASE("constants carry no partials") {
  DualScalar c(3.5);
  REQUIRE(c.n_partials() == 0);
  DualScalar x = DualScalar::variable(2.0, 0, 2);
  DualScalar y = c * x + DualScalar(1.0);
  REQUIRE(y.partial(0) == 3.5);
  REQUIRE(y.partial(1) == 0.0);
}

TEST_CASE("second-order duals give exact quadratic hessians") {
  // f(x) = x' A x with A symmetric
  const std::size_t d = 3;
  double a[d][d] = {{2.0, 0.5, -1.0}, {0.5, 3.0, 0.25}, {-1.0, 0.25, 1.5}};
  std::vector<double> x0{0.3, -1.2, 2.0};
  std::vector<Dual2Scalar> x(d);
  for (std::size_t i = 0; i < d; ++i) {
    Dual<double> inner = Dual<double>::variable(x0[i], i, d);
    x[i] = Dual2Scalar::variable(inner, i, d);
  }
  Dual2Scalar f(0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) f += x[i] * Dual2Scalar(Dual<double>(a[i][j])) * x[j];
  std::vector<double> h = hessian_of(f, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      REQUIRE(h[i * d + j] == Catch::Approx(2.0 * a[i][j]).margin(1e-12));
}

TEST_CASE("negative infinity values keep gradients clean in log-mean-exp") {
  std::vector<DualScalar> v(3);
  v[0] = DualScalar::variable(std::log(0.5), 0, 1);
  v[1] = DualScalar(kNegInf);
  v[2] = DualScalar::variable(std::log(0.25), 0, 1);
  DualScalar lme = log_mean_exp_generic(std::span<const DualScalar>(v));
  REQUIRE(std::isfinite(value_of(lme)));
  REQUIRE(std::isfinite(lme.partial(0)));
  REQUIRE(value_of(lme) == Catch::Approx(std::log(0.75 / 3.0)));
}
