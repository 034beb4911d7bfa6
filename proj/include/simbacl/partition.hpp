#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "simbacl/error.hpp"

namespace simbacl {

/// Disjoint cover of the component indices [0, N). Blocks are canonicalized
/// (sorted within, ordered by first element) so that any two partitions with
/// the same blocks compare — and compute — identically.
class Partition {
public:
  static constexpr std::uint64_t kDefaultBlockSpaceCap = 1u << 12;

  Partition(int n_components, std::vector<std::vector<int>> blocks, int state_card,
            std::uint64_t block_space_cap = kDefaultBlockSpaceCap)
      : n_(n_components), blocks_(std::move(blocks)) {
    for (auto& b : blocks_) {
      if (b.empty()) throw ConfigError("partition: empty block");
      std::sort(b.begin(), b.end());
    }
    std::sort(blocks_.begin(), blocks_.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::vector<int> seen(n_, 0);
    for (const auto& b : blocks_) {
      std::uint64_t space = 1;
      for (int c : b) {
        if (c < 0 || c >= n_) throw ConfigError("partition: component index out of range");
        if (seen[c]++) throw ConfigError("partition: overlapping blocks");
        space *= static_cast<std::uint64_t>(state_card);
        if (space > block_space_cap)
          throw CapacityError("partition: block state space exceeds cap of " +
                              std::to_string(block_space_cap));
      }
      max_block_ = std::max(max_block_, static_cast<int>(b.size()));
    }
    for (int c = 0; c < n_; ++c)
      if (!seen[c]) throw ConfigError("partition: blocks do not cover all components");
  }

  static Partition singletons(int n, int state_card) {
    std::vector<std::vector<int>> b(n);
    for (int i = 0; i < n; ++i) b[i] = {i};
    return Partition(n, std::move(b), state_card);
  }

  /// Consecutive pairs {0,1},{2,3},...; N must be even.
  static Partition pairs(int n, int state_card) {
    if (n % 2 != 0) throw ConfigError("partition: pairs requires an even number of components");
    std::vector<std::vector<int>> b(n / 2);
    for (int i = 0; i < n / 2; ++i) b[i] = {2 * i, 2 * i + 1};
    return Partition(n, std::move(b), state_card);
  }

  int n_components() const { return n_; }
  int max_block() const { return max_block_; }
  std::size_t n_blocks() const { return blocks_.size(); }
  const std::vector<int>& block(std::size_t k) const { return blocks_[k]; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }

  bool operator==(const Partition& o) const { return n_ == o.n_ && blocks_ == o.blocks_; }

private:
  int n_;
  std::vector<std::vector<int>> blocks_;
  int max_block_ = 0;
};

}  // namespace simbacl
