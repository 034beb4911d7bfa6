#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simbacl/dual.hpp"
#include "simbacl/error.hpp"

namespace simbacl {

/// How a natural-scale parameter maps onto the unconstrained vector that the
/// optimizer and the differentiation engine see.
enum class Transform {
  identity,  // regression coefficients
  log,       // strictly positive rates
  logit,     // probabilities in [0,1]
};

struct ParamBlock {
  std::string name;
  std::size_t size;
  Transform transform;
};

class ParamLayout {
public:
  ParamLayout() = default;
  explicit ParamLayout(std::vector<ParamBlock> blocks) : blocks_(std::move(blocks)) {
    offsets_.reserve(blocks_.size());
    for (const auto& b : blocks_) {
      offsets_.push_back(dim_);
      dim_ += b.size;
    }
  }

  std::size_t dim() const { return dim_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  bool has(std::string_view name) const {
    for (const auto& b : blocks_)
      if (b.name == name) return true;
    return false;
  }

  std::size_t block_index(std::string_view name) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (blocks_[i].name == name) return i;
    throw ConfigError("unknown parameter block: " + std::string(name));
  }

  std::size_t offset(std::string_view name) const { return offsets_[block_index(name)]; }
  std::size_t block_size(std::string_view name) const { return blocks_[block_index(name)].size; }

  Transform transform_at(std::size_t flat_index) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (flat_index < offsets_[i] + blocks_[i].size) return blocks_[i].transform;
    throw ConfigError("parameter index out of range");
  }

  /// Coordinate label like "beta_lambda[1]" (or just the name for scalars).
  std::string coord_name(std::size_t flat_index) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (flat_index < offsets_[i] + blocks_[i].size) {
        if (blocks_[i].size == 1) return blocks_[i].name;
        return blocks_[i].name + "[" + std::to_string(flat_index - offsets_[i]) + "]";
      }
    throw ConfigError("parameter index out of range");
  }

private:
  std::vector<ParamBlock> blocks_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_ = 0;
};

/// Natural -> unconstrained. Probabilities at exactly 0 or 1 map to -inf/+inf,
/// which the downstream arithmetic handles (their gradient is identically 0).
inline double to_unconstrained(double natural, Transform t, const std::string& where) {
  switch (t) {
    case Transform::identity:
      return natural;
    case Transform::log:
      if (!(natural > 0.0))
        throw ConfigError(where + ": rate must be strictly positive, got " +
                          std::to_string(natural));
      return std::log(natural);
    case Transform::logit:
      if (natural < 0.0 || natural > 1.0)
        throw ConfigError(where + ": probability must lie in [0,1], got " +
                          std::to_string(natural));
      if (natural == 0.0) return -std::numeric_limits<double>::infinity();
      if (natural == 1.0) return std::numeric_limits<double>::infinity();
      return std::log(natural / (1.0 - natural));
  }
  throw ConfigError("bad transform");
}

inline double to_natural(double unconstrained, Transform t) {
  switch (t) {
    case Transform::identity:
      return unconstrained;
    case Transform::log:
      return std::exp(unconstrained);
    case Transform::logit:
      return sigmoid(unconstrained);
  }
  throw ConfigError("bad transform");
}

inline std::vector<double> to_unconstrained(const ParamLayout& layout,
                                            std::span<const double> natural) {
  if (natural.size() != layout.dim())
    throw ConfigError("parameter vector has length " + std::to_string(natural.size()) +
                      ", expected " + std::to_string(layout.dim()));
  std::vector<double> u(natural.size());
  for (std::size_t i = 0; i < natural.size(); ++i)
    u[i] = to_unconstrained(natural[i], layout.transform_at(i), layout.coord_name(i));
  return u;
}

inline std::vector<double> to_natural(const ParamLayout& layout,
                                      std::span<const double> unconstrained) {
  if (unconstrained.size() != layout.dim())
    throw ConfigError("parameter vector has length " + std::to_string(unconstrained.size()) +
                      ", expected " + std::to_string(layout.dim()));
  std::vector<double> n(unconstrained.size());
  for (std::size_t i = 0; i < unconstrained.size(); ++i)
    n[i] = to_natural(unconstrained[i], layout.transform_at(i));
  return n;
}

/// Lift an unconstrained parameter vector into first-order duals, seeding
/// unit partials only on the `active` coordinates (empty mask = all).
inline std::vector<DualScalar> seed_gradient(std::span<const double> theta,
                                             std::span<const std::size_t> active) {
  std::vector<DualScalar> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = DualScalar(theta[i]);
  for (std::size_t k = 0; k < active.size(); ++k)
    out[active[k]] = DualScalar::variable(theta[active[k]], k, active.size());
  return out;
}

inline std::vector<Dual2Scalar> seed_hessian(std::span<const double> theta,
                                             std::span<const std::size_t> active) {
  std::vector<Dual2Scalar> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = Dual2Scalar(Dual<double>(theta[i]));
  for (std::size_t k = 0; k < active.size(); ++k) {
    Dual<double> inner = Dual<double>::variable(theta[active[k]], k, active.size());
    out[active[k]] = Dual2Scalar::variable(inner, k, active.size());
  }
  return out;
}

inline std::vector<std::size_t> all_coords(std::size_t dim) {
  std::vector<std::size_t> v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = i;
  return v;
}

}  // namespace simbacl
