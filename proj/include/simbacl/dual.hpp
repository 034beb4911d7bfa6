#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

#include "simbacl/error.hpp"

namespace simbacl {

/// Forward-mode scalar: value plus a vector of first partials. Constants keep
/// an empty partial vector, so lifting θ-independent code costs almost
/// nothing. Nesting (Dual<Dual<double>>) gives exact second derivatives.
template <typename T>
class Dual {
public:
  static constexpr std::size_t kMaxPartials = 16;

  constexpr Dual() : v_(T(0)) {}
  constexpr Dual(double c) : v_(c) {}  // NOLINT: implicit constant lift
  template <typename U = T, typename = std::enable_if_t<!std::is_same_v<U, double>>>
  constexpr Dual(T v) : v_(std::move(v)) {}  // NOLINT: implicit lift of inner scalar

  static Dual variable(T v, std::size_t index, std::size_t dim) {
    if (dim > kMaxPartials) throw ConfigError("Dual: too many active parameters");
    Dual x(static_cast<T&&>(v));
    x.n_ = static_cast<std::uint32_t>(dim);
    x.d_[index] = T(1);
    return x;
  }

  const T& value() const { return v_; }
  std::size_t n_partials() const { return n_; }
  T partial(std::size_t i) const { return i < n_ ? d_[i] : T(0); }

  Dual operator-() const {
    Dual r(*this);
    r.v_ = -r.v_;
    for (std::uint32_t i = 0; i < r.n_; ++i) r.d_[i] = -r.d_[i];
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v_ += o.v_;
    grow(o.n_);
    for (std::uint32_t i = 0; i < o.n_; ++i) d_[i] += o.d_[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v_ -= o.v_;
    grow(o.n_);
    for (std::uint32_t i = 0; i < o.n_; ++i) d_[i] -= o.d_[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    grow(o.n_);
    for (std::uint32_t i = 0; i < n_; ++i) {
      T od = i < o.n_ ? o.d_[i] : T(0);
      d_[i] = d_[i] * o.v_ + v_ * od;
    }
    v_ *= o.v_;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    grow(o.n_);
    T inv = T(1) / o.v_;
    T q = v_ * inv;
    for (std::uint32_t i = 0; i < n_; ++i) {
      T od = i < o.n_ ? o.d_[i] : T(0);
      d_[i] = (d_[i] - q * od) * inv;
    }
    v_ = q;
    return *this;
  }

  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend Dual operator/(Dual a, const Dual& b) { return a /= b; }

  friend bool operator<(const Dual& a, const Dual& b) { return a.v_ < b.v_; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v_ > b.v_; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.v_ <= b.v_; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.v_ >= b.v_; }
  friend bool operator==(const Dual& a, const Dual& b) { return a.v_ == b.v_; }

  /// Apply a scalar map given the mapped value and the local derivative.
  Dual chain(T fv, const T& dfdv) const {
    Dual r;
    r.v_ = static_cast<T&&>(fv);
    r.n_ = n_;
    for (std::uint32_t i = 0; i < n_; ++i) r.d_[i] = d_[i] * dfdv;
    return r;
  }

private:
  void grow(std::uint32_t n) {
    if (n > n_) n_ = n;
  }

  T v_;
  std::uint32_t n_ = 0;
  std::array<T, kMaxPartials> d_{};
};

using DualScalar = Dual<double>;
using Dual2Scalar = Dual<Dual<double>>;

// --- scalar traits -------------------------------------------------------

inline double value_of(double x) { return x; }
template <typename T>
double value_of(const Dual<T>& x) {
  return value_of(x.value());
}

template <typename T>
struct is_dual : std::false_type {};
template <typename T>
struct is_dual<Dual<T>> : std::true_type {};

// --- elementary functions ------------------------------------------------

using std::exp;
using std::fabs;
using std::log;
using std::log1p;
using std::pow;
using std::sqrt;

template <typename T>
Dual<T> exp(const Dual<T>& x) {
  T e = exp(x.value());
  return x.chain(static_cast<T&&>(e), e);
}

template <typename T>
Dual<T> log(const Dual<T>& x) {
  return x.chain(log(x.value()), T(1) / x.value());
}

template <typename T>
Dual<T> log1p(const Dual<T>& x) {
  return x.chain(log1p(x.value()), T(1) / (T(1) + x.value()));
}

template <typename T>
Dual<T> sqrt(const Dual<T>& x) {
  T s = sqrt(x.value());
  return x.chain(static_cast<T&&>(s), T(0.5) / s);
}

template <typename T>
Dual<T> pow(const Dual<T>& x, double e) {
  T p = pow(x.value(), e);
  return x.chain(static_cast<T&&>(p), T(e) * pow(x.value(), e - 1.0));
}

template <typename T>
Dual<T> fabs(const Dual<T>& x) {
  return value_of(x) < 0 ? -x : x;
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename T>
Dual<T> sigmoid(const Dual<T>& x) {
  T s;
  if (value_of(x) >= 0) {
    s = T(1) / (T(1) + exp(-x.value()));
  } else {
    T e = exp(x.value());
    s = e / (T(1) + e);
  }
  T ds = s * (T(1) - s);
  return x.chain(static_cast<T&&>(s), ds);
}

template <typename S>
S max_scalar(const S& a, const S& b) {
  return value_of(a) >= value_of(b) ? a : b;
}

/// base^e for a nonnegative double base and a (possibly dual) exponent.
/// base == 0 maps to exactly 0 so that d/de 0^e never produces 0 * log(0).
template <typename S>
S pow_pd(double base, const S& e) {
  if (base == 0.0) return S(0.0);
  return exp(e * S(std::log(base)));
}

/// log(sum exp(v)) over possibly dual-valued terms; -inf entries contribute
/// exactly zero (with zero partials), so dead Monte Carlo samples cannot
/// poison the gradient with inf*0.
template <typename S>
S logsumexp_generic(std::span<const S> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (const S& x : v) m = std::max(m, value_of(x));
  if (m == -std::numeric_limits<double>::infinity()) return S(m);
  S s(0.0);
  for (const S& x : v) {
    if (value_of(x) == -std::numeric_limits<double>::infinity()) continue;
    s += exp(x - S(m));
  }
  return log(s) + S(m);
}

template <typename S>
S log_mean_exp_generic(std::span<const S> v) {
  return logsumexp_generic(v) - S(std::log(static_cast<double>(v.size())));
}

// --- gradient extraction -------------------------------------------------

inline std::vector<double> gradient_of(const DualScalar& x, std::size_t dim) {
  std::vector<double> g(dim);
  for (std::size_t i = 0; i < dim; ++i) g[i] = x.partial(i);
  return g;
}

/// Row-major d x d Hessian from a second-order dual, symmetrized.
inline std::vector<double> hessian_of(const Dual2Scalar& x, std::size_t dim) {
  std::vector<double> h(dim * dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      double hij = x.partial(i).partial(j);
      double hji = x.partial(j).partial(i);
      h[i * dim + j] = 0.5 * (hij + hji);
    }
  return h;
}

}  // namespace simbacl
