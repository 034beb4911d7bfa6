#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "simbacl/dual.hpp"
#include "simbacl/math.hpp"
#include "simbacl/model.hpp"
#include "simbacl/partition.hpp"
#include "simbacl/rng.hpp"
#include "simbacl/simulate.hpp"
#include "simbacl/threads.hpp"

namespace simbacl {

enum class Variant { feedback, no_feedback };

inline std::string to_string(Variant v) {
  return v == Variant::feedback ? "feedback" : "no_feedback";
}

struct FilterDiag {
  double max_belief_sum_err = 0.0;  // |sum - 1| after each correction
  void record(double sum) {
    max_belief_sum_err = std::max(max_belief_sum_err, std::fabs(sum - 1.0));
  }
  void merge(const FilterDiag& o) {
    max_belief_sum_err = std::max(max_belief_sum_err, o.max_belief_sum_err);
  }
};

/// Per-(trajectory, theta) cache shared by every block filtered against the
/// same simulation. For count-coupled models it also carries, lazily, the
/// per-step tables of log complement probabilities under each attainable
/// infected count, which is what keeps the feedback pass linear in N.
template <typename Model, typename S>
struct ComplementContext {
  const Trajectory* traj = nullptr;
  std::vector<int> infected_count;  // homogeneous: count per row 0..T-1
  std::vector<S> base_field;        // heterogeneous: (row t) x (target n), t in 0..T-1

  struct CountTable {
    bool built = false;
    int lo = 0;
    std::vector<S> fin;      // finite part of sum_n log p(traj_t^n | count)
    std::vector<int> zeros;  // number of exactly-zero factors
  };
  int table_halfwidth = 0;
  mutable std::vector<CountTable> tables;  // indexed by t-1
};

/// `max_block` bounds how far a block override can move the infected count.
template <typename Model, typename S>
ComplementContext<Model, S> make_complement_context(const Model& model, std::span<const S> th,
                                                    const Trajectory& traj, int max_block = 1) {
  ComplementContext<Model, S> ctx;
  ctx.traj = &traj;
  const int n = model.n_components();
  const int rows = traj.horizon;  // prev rows 0..T-1
  if constexpr (Model::kHomogeneousField) {
    ctx.infected_count.resize(rows);
    for (int t = 0; t < rows; ++t)
      ctx.infected_count[t] = count_in_state(traj.row(t), n, model.infectious_state());
    ctx.table_halfwidth = max_block;
    ctx.tables.resize(rows);
  } else {
    ctx.base_field.resize(static_cast<std::size_t>(rows) * n);
    for (int t = 0; t < rows; ++t)
      model.fields(th, traj.row(t), ctx.base_field.data() + static_cast<std::size_t>(t) * n);
  }
  return ctx;
}

namespace detail {

constexpr int kMaxBlock = 16;

template <typename Model, typename S>
const typename ComplementContext<Model, S>::CountTable& count_table(
    const Model& model, std::span<const S> th, const ComplementContext<Model, S>& ctx, int t) {
  auto& tab = ctx.tables[t - 1];
  if (tab.built) return tab;
  const Trajectory& traj = *ctx.traj;
  const int n = model.n_components();
  constexpr int card = Model::kStateCard;
  int c = ctx.infected_count[t - 1];
  tab.lo = std::max(0, c - ctx.table_halfwidth);
  int hi = std::min(n, c + ctx.table_halfwidth);
  tab.fin.assign(hi - tab.lo + 1, S(0.0));
  tab.zeros.assign(hi - tab.lo + 1, 0);
  S row[card];
  for (int count = tab.lo; count <= hi; ++count) {
    double field = model.field_from_count(count);
    S fsum(0.0);
    int zeros = 0;
    for (int i = 0; i < n; ++i) {
      model.row_from_field(i, traj.at(t - 1, i), field, th, row);
      const S& p = row[traj.at(t, i)];
      if (value_of(p) == 0.0)
        ++zeros;
      else
        fsum += log(p);
    }
    tab.fin[count - tab.lo] = fsum;
    tab.zeros[count - tab.lo] = zeros;
  }
  tab.built = true;
  return tab;
}

/// Filtering machinery for one block against one fixed complement
/// trajectory. Block configurations are mixed-radix codes: digit j is the
/// state of block[j].
template <typename Model, typename S>
class BlockMachine {
public:
  static constexpr int card = Model::kStateCard;

  BlockMachine(const Model& model, std::span<const S> th, std::span<const int> block)
      : model_(model), th_(th), block_(block), k_(static_cast<int>(block.size())) {
    m_ = 1;
    for (int j = 0; j < k_; ++j) m_ *= card;
    rows_.resize(static_cast<std::size_t>(k_) * card);
    expand_.resize(m_);
    tmp_.resize(m_);
    if constexpr (!Model::kHomogeneousField) {
      // source-in-block -> target weights, fixed over time
      weights_.resize(static_cast<std::size_t>(k_) * model_.n_components());
      for (int j = 0; j < k_; ++j)
        for (int n = 0; n < model_.n_components(); ++n)
          weights_[static_cast<std::size_t>(j) * model_.n_components() + n] =
              model_.field_weight(th_, block_[j], n);
    }
  }

  int n_configs() const { return m_; }
  int block_size() const { return k_; }

  void decode(int cfg, int* states) const {
    for (int j = 0; j < k_; ++j) {
      states[j] = cfg % card;
      cfg /= card;
    }
  }

  void init_belief(S* b) const {
    // expansions run from the highest block position down so that position j
    // occupies digit j of the config code
    S dist[card];
    b[0] = S(1.0);
    int width = 1;
    for (int j = k_ - 1; j >= 0; --j) {
      model_.initial_dist(block_[j], th_, dist);
      for (int w = width; w-- > 0;)
        for (int x = card - 1; x >= 0; --x) b[w * card + x] = b[w] * dist[x];
      width *= card;
    }
  }

  /// Fills rows[j*card + x] = p(x_t^{block_j} = x | x_{t-1} = (cfg, traj row t-1)).
  void config_rows(const ComplementContext<Model, S>& ctx, int t, const int* cfg_states,
                   S* rows) const {
    const Trajectory& traj = *ctx.traj;
    if constexpr (Model::kHomogeneousField) {
      int count = ctx.infected_count[t - 1] - block_traj_count(traj, t - 1);
      for (int j = 0; j < k_; ++j) count += (cfg_states[j] == model_.infectious_state());
      double field = model_.field_from_count(count);
      for (int j = 0; j < k_; ++j)
        model_.row_from_field(block_[j], cfg_states[j], field, th_, rows + j * card);
    } else {
      for (int j = 0; j < k_; ++j) {
        S field =
            ctx.base_field[static_cast<std::size_t>(t - 1) * model_.n_components() + block_[j]];
        for (int l = 0; l < k_; ++l) {
          int was = traj.at(t - 1, block_[l]) == model_.infectious_state();
          int now = cfg_states[l] == model_.infectious_state();
          if (was != now) field += S(static_cast<double>(now - was)) * weight(l, block_[j]);
        }
        model_.row_from_field(block_[j], cfg_states[j], field, th_, rows + j * card);
      }
    }
  }

  /// One prediction step: out[m'] = sum_m b[m] prod_j rows_m[j][m'_j].
  void predict(const ComplementContext<Model, S>& ctx, int t, const S* b, S* out) {
    for (int m = 0; m < m_; ++m) out[m] = S(0.0);
    int cfg[kMaxBlock];
    for (int m = 0; m < m_; ++m) {
      if (value_of(b[m]) == 0.0) continue;
      decode(m, cfg);
      config_rows(ctx, t, cfg, rows_.data());
      expand_[0] = b[m];
      int width = 1;
      for (int j = k_ - 1; j >= 0; --j) {
        for (int w = width; w-- > 0;)
          for (int x = card - 1; x >= 0; --x)
            tmp_[w * card + x] = expand_[w] * rows_[j * card + x];
        width *= card;
        std::swap(expand_, tmp_);
      }
      for (int m2 = 0; m2 < m_; ++m2) out[m2] += expand_[m2];
    }
  }

  /// Observation weights w[m] = prod_j p(y_t^{block_j} | x = m_j).
  void obs_weights(const ObservationSet& y, int t, S* w) const {
    S ev[card];
    w[0] = S(1.0);
    int width = 1;
    for (int j = k_ - 1; j >= 0; --j) {
      emission_or_missing(model_, block_[j], y.at(t, block_[j]), th_, ev);
      for (int v = width; v-- > 0;)
        for (int x = card - 1; x >= 0; --x) w[v * card + x] = w[v] * ev[x];
      width *= card;
    }
  }

  /// log prod_{n outside the block} p(traj_t^n | x_{t-1} = (cfg, traj row t-1))
  /// for every config, split into a finite part plus a flag for exact zeros
  /// (so -inf never meets dual partials).
  void complement_log_prob(const ComplementContext<Model, S>& ctx, int t, S* fin,
                           std::uint8_t* is_zero) const {
    const Trajectory& traj = *ctx.traj;
    const int n = model_.n_components();
    int cfg[kMaxBlock];
    S row[card];
    if constexpr (Model::kHomogeneousField) {
      const auto& tab = count_table(model_, th_, ctx, t);
      int base = ctx.infected_count[t - 1] - block_traj_count(traj, t - 1);
      for (int m = 0; m < m_; ++m) {
        decode(m, cfg);
        int count = base;
        for (int j = 0; j < k_; ++j) count += (cfg[j] == model_.infectious_state());
        double field = model_.field_from_count(count);
        S fsum = tab.fin[count - tab.lo];
        int zeros = tab.zeros[count - tab.lo];
        for (int j = 0; j < k_; ++j) {  // remove the block's own factors
          model_.row_from_field(block_[j], traj.at(t - 1, block_[j]), field, th_, row);
          const S& p = row[traj.at(t, block_[j])];
          if (value_of(p) == 0.0)
            --zeros;
          else
            fsum -= log(p);
        }
        fin[m] = fsum;
        is_zero[m] = zeros > 0;
      }
    } else {
      for (int m = 0; m < m_; ++m) {
        decode(m, cfg);
        S fsum(0.0);
        int zeros = 0;
        for (int i = 0; i < n; ++i) {
          if (in_block(i)) continue;
          S field = ctx.base_field[static_cast<std::size_t>(t - 1) * n + i];
          for (int l = 0; l < k_; ++l) {
            int was = traj.at(t - 1, block_[l]) == model_.infectious_state();
            int now = cfg[l] == model_.infectious_state();
            if (was != now) field += S(static_cast<double>(now - was)) * weight(l, i);
          }
          model_.row_from_field(i, traj.at(t - 1, i), field, th_, row);
          const S& p = row[traj.at(t, i)];
          if (value_of(p) == 0.0)
            ++zeros;
          else
            fsum += log(p);
        }
        fin[m] = fsum;
        is_zero[m] = zeros > 0;
      }
    }
  }

  bool in_block(int component) const {
    for (int j = 0; j < k_; ++j)
      if (block_[j] == component) return true;
    return false;
  }

  int block_traj_count(const Trajectory& traj, int t) const {
    int c = 0;
    for (int j = 0; j < k_; ++j) c += (traj.at(t, block_[j]) == model_.infectious_state());
    return c;
  }

private:
  const S& weight(int j, int target) const {
    return weights_[static_cast<std::size_t>(j) * model_.n_components() + target];
  }

  const Model& model_;
  std::span<const S> th_;
  std::span<const int> block_;
  int k_;
  int m_;
  std::vector<S> weights_;
  std::vector<S> rows_, expand_, tmp_;
};

}  // namespace detail

/// log p~(y^K | complement trajectory): forward filtering on the block with
/// the other components pinned to the simulation, no feedback terms. A zero
/// correction normalizer yields -inf (a zero-likelihood simulation), not an
/// exception.
template <typename Model, typename S>
S filter_without_feedback(const Model& model, std::span<const S> th, const ObservationSet& y,
                          const ComplementContext<Model, S>& ctx, std::span<const int> block,
                          FilterDiag* diag = nullptr) {
  detail::BlockMachine<Model, S> mach(model, th, block);
  const int m = mach.n_configs();
  std::vector<S> b(m), bp(m), w(m);
  mach.init_belief(b.data());
  S loglik(0.0);
  for (int t = 1; t <= y.horizon; ++t) {
    mach.predict(ctx, t, b.data(), bp.data());
    mach.obs_weights(y, t, w.data());
    S z(0.0);
    for (int i = 0; i < m; ++i) {
      bp[i] *= w[i];
      z += bp[i];
    }
    if (value_of(z) <= 0.0) return S(kNegInf);
    loglik += log(z);
    S check(0.0);
    for (int i = 0; i < m; ++i) {
      b[i] = bp[i] / z;
      check += b[i];
    }
    if (diag) diag->record(value_of(check));
  }
  return loglik;
}

template <typename Model, typename S>
S filter_without_feedback(const Model& model, std::span<const S> th, const ObservationSet& y,
                          const Trajectory& traj, std::span<const int> block,
                          FilterDiag* diag = nullptr) {
  auto ctx =
      make_complement_context<Model, S>(model, th, traj, static_cast<int>(block.size()));
  return filter_without_feedback(model, th, y, ctx, block, diag);
}

/// log p(y^K | complement trajectory) including the simulation feedback. Per
/// step: feedback correction, prediction, observation correction; a parallel
/// filter tracks p(x^K_t | complement), whose increments normalize the
/// feedback factors (each accumulated increment is the ratio of the two
/// complement predictives, which is O(1) even though each side is a product
/// of N transition probabilities).
template <typename Model, typename S>
S filter_with_feedback(const Model& model, std::span<const S> th, const ObservationSet& y,
                       const ComplementContext<Model, S>& ctx, std::span<const int> block,
                       FilterDiag* diag = nullptr) {
  detail::BlockMachine<Model, S> mach(model, th, block);
  const int m = mach.n_configs();
  std::vector<S> by(m), bsim(m), scratch(m), w(m), fin(m);
  std::vector<std::uint8_t> zero(m);
  mach.init_belief(by.data());
  bsim = by;
  S loglik(0.0);
  const int horizon = y.horizon;
  for (int t = 1; t <= horizon; ++t) {
    if (t < horizon) {
      // feedback correction: weight configs by p(traj_t complement | cfg, ...)
      mach.complement_log_prob(ctx, t, fin.data(), zero.data());
      double shift = kNegInf;
      for (int i = 0; i < m; ++i)
        if (!zero[i]) shift = std::max(shift, value_of(fin[i]));
      if (shift == kNegInf)
        throw NumericError("filter_with_feedback: conditioning simulation has probability 0");
      S num_y(0.0), num_sim(0.0);
      for (int i = 0; i < m; ++i) {
        S e = zero[i] ? S(0.0) : exp(fin[i] - S(shift));
        scratch[i] = e;
        num_y += e * by[i];
        num_sim += e * bsim[i];
      }
      if (value_of(num_sim) <= 0.0)
        throw NumericError("filter_with_feedback: conditioning simulation has probability 0");
      if (value_of(num_y) <= 0.0) return S(kNegInf);
      loglik += log(num_y) - log(num_sim);  // the shift cancels in the ratio
      S cy(0.0), cs(0.0);
      for (int i = 0; i < m; ++i) {
        by[i] = scratch[i] * by[i] / num_y;
        bsim[i] = scratch[i] * bsim[i] / num_sim;
        cy += by[i];
        cs += bsim[i];
      }
      if (diag) {
        diag->record(value_of(cy));
        diag->record(value_of(cs));
      }
    }
    // prediction
    mach.predict(ctx, t, by.data(), scratch.data());
    std::swap(by, scratch);
    if (t < horizon) {
      mach.predict(ctx, t, bsim.data(), scratch.data());
      std::swap(bsim, scratch);
    }
    // observation correction
    mach.obs_weights(y, t, w.data());
    S z(0.0);
    for (int i = 0; i < m; ++i) {
      by[i] *= w[i];
      z += by[i];
    }
    if (value_of(z) <= 0.0) return S(kNegInf);
    loglik += log(z);
    S check(0.0);
    for (int i = 0; i < m; ++i) {
      by[i] = by[i] / z;
      check += by[i];
    }
    if (diag) diag->record(value_of(check));
  }
  return loglik;
}

template <typename Model, typename S>
S filter_with_feedback(const Model& model, std::span<const S> th, const ObservationSet& y,
                       const Trajectory& traj, std::span<const int> block,
                       FilterDiag* diag = nullptr) {
  auto ctx =
      make_complement_context<Model, S>(model, th, traj, static_cast<int>(block.size()));
  return filter_with_feedback(model, th, y, ctx, block, diag);
}

// --- Monte Carlo composite likelihood --------------------------------------

template <typename S>
struct MarginalEstimate {
  std::vector<S> block_log_marginal;  // per block, log of the simulation mean
  S composite = S(0.0);               // sum over blocks
  std::vector<double> per_sim_log;    // (sim, block) row-major, value parts
  std::vector<int> all_zero_blocks;   // blocks whose every simulation was -inf
  FilterDiag diag;
  int n_sims = 0;

  double per_sim(int sim, std::size_t block, std::size_t n_blocks) const {
    return per_sim_log[sim * n_blocks + block];
  }
};

struct SimbaOptions {
  int n_sims = 100;
  Variant variant = Variant::no_feedback;
  std::uint64_t seed = 0;
  int threads = 1;
  bool throw_on_all_zero = false;  // composite is -inf either way
};

/// Shared-simulation composite likelihood: P trajectories are drawn once and
/// every block is filtered against each of them; per-block values aggregate
/// by log-mean-exp over simulations and the composite sums over blocks.
/// Trajectories are sampled from the value part of theta, so under
/// differentiation they are constants.
template <typename Model, typename S>
MarginalEstimate<S> simba_loglik(const Model& model, std::span<const S> th,
                                 const ObservationSet& y, const Partition& partition,
                                 const SimbaOptions& opt) {
  if (opt.n_sims < 1) throw ConfigError("simba_loglik: need at least one simulation");
  if (y.n_components != model.n_components())
    throw DataError("simba_loglik: observation set has " + std::to_string(y.n_components) +
                    " components, model has " + std::to_string(model.n_components()));
  const std::size_t n_blocks = partition.n_blocks();
  const int p = opt.n_sims;

  std::vector<double> th_value(th.size());
  for (std::size_t i = 0; i < th.size(); ++i) th_value[i] = value_of(th[i]);

  std::vector<S> values(static_cast<std::size_t>(p) * n_blocks);
  std::vector<FilterDiag> diags(p);
  Rng base(opt.seed);
  parallel_for(p, opt.threads, [&](std::size_t i) {
    Rng sim_rng = base.derive("sim", i);
    Trajectory traj = sample_trajectory(model, th_value, y.horizon, sim_rng);
    auto ctx = make_complement_context<Model, S>(model, th, traj, partition.max_block());
    for (std::size_t k = 0; k < n_blocks; ++k) {
      const auto& block = partition.block(k);
      values[i * n_blocks + k] =
          opt.variant == Variant::feedback
              ? filter_with_feedback(model, th, y, ctx, block, &diags[i])
              : filter_without_feedback(model, th, y, ctx, block, &diags[i]);
    }
  });

  MarginalEstimate<S> est;
  est.n_sims = p;
  est.per_sim_log.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) est.per_sim_log[i] = value_of(values[i]);
  for (const auto& d : diags) est.diag.merge(d);

  est.block_log_marginal.resize(n_blocks);
  std::vector<S> column(p);
  for (std::size_t k = 0; k < n_blocks; ++k) {
    for (int i = 0; i < p; ++i) column[i] = values[i * n_blocks + k];
    S lm = log_mean_exp_generic(std::span<const S>(column));
    est.block_log_marginal[k] = lm;
    if (value_of(lm) == kNegInf) est.all_zero_blocks.push_back(static_cast<int>(k));
    est.composite += lm;
  }
  if (!est.all_zero_blocks.empty()) {
    est.composite = S(kNegInf);
    if (opt.throw_on_all_zero) {
      std::string blocks;
      for (int k : est.all_zero_blocks) blocks += (blocks.empty() ? "" : ", ") + std::to_string(k);
      throw NumericError("simba_loglik: all simulations have zero likelihood for block(s) " +
                         blocks);
    }
  }
  return est;
}

// --- empirical KL and the feedback-removal bound ---------------------------

/// Empirical divergence between two likelihood approximations evaluated at
/// the same E simulated datasets: sum_e exp(lp_e) (lp_e - lq_e).
inline double empirical_kl(std::span<const double> log_p, std::span<const double> log_q) {
  if (log_p.size() != log_q.size() || log_p.empty())
    throw DataError("empirical_kl: evaluation vectors must have equal nonzero length");
  double kl = 0.0;
  for (std::size_t e = 0; e < log_p.size(); ++e) {
    if (log_p[e] == kNegInf) continue;  // 0 log 0 = 0
    kl += std::exp(log_p[e]) * (log_p[e] - log_q[e]);
  }
  return kl;
}

struct KlEstimate {
  double point = 0.0;
  double loo_mean = 0.0;
  double loo_sd = 0.0;
};

/// Leave-one-out resampling of the empirical divergence over the E
/// evaluations.
inline KlEstimate empirical_kl_loo(std::span<const double> log_p, std::span<const double> log_q) {
  const std::size_t e_total = log_p.size();
  KlEstimate est;
  est.point = empirical_kl(log_p, log_q);
  if (e_total < 2) {
    est.loo_mean = est.point;
    return est;
  }
  std::vector<double> loo(e_total);
  for (std::size_t drop = 0; drop < e_total; ++drop) {
    double kl = 0.0;
    for (std::size_t e = 0; e < e_total; ++e) {
      if (e == drop || log_p[e] == kNegInf) continue;
      kl += std::exp(log_p[e]) * (log_p[e] - log_q[e]);
    }
    loo[drop] = kl;
  }
  est.loo_mean = sample_mean(loo);
  est.loo_sd = sample_sd(loo);
  return est;
}

/// Monte Carlo estimate of the divergence bound for one block: the expected
/// conditional variance of the block's interaction statistic along the
/// complement filtration, scaled by a(eps)/N and the per-component constants.
/// Requires a model exposing assumption_constants().
template <typename Model>
double theorem1_bound(const Model& model, std::span<const double> th, int horizon,
                      std::span<const int> block, int n_sims, std::uint64_t seed) {
  const AssumptionConstants ac = model.assumption_constants(th);
  const int n = model.n_components();
  const int inf_state = model.infectious_state();
  detail::BlockMachine<Model, double> mach(model, th, block);
  const int m = mach.n_configs();
  const int k = static_cast<int>(block.size());

  Rng base(seed);
  double total = 0.0;
  std::vector<double> b(m), scratch(m), fin(m);
  std::vector<std::uint8_t> zero(m);
  int cfg[detail::kMaxBlock];
  for (int i = 0; i < n_sims; ++i) {
    Rng sim_rng = base.derive("sim", i);
    Trajectory traj = sample_trajectory(model, th, horizon, sim_rng);
    auto ctx = make_complement_context<Model, double>(model, th, traj, k);
    mach.init_belief(b.data());
    double acc = 0.0;
    for (int t = 1; t <= horizon; ++t) {
      // b currently holds p(x^K_{t-1} | complement rows 0..t-1)
      if (ac.unit_weights) {
        double mean = 0.0, mean_sq = 0.0;
        for (int c = 0; c < m; ++c) {
          mach.decode(c, cfg);
          double d = 0.0;
          for (int j = 0; j < k; ++j) d += (cfg[j] == inf_state);
          mean += b[c] * d;
          mean_sq += b[c] * d * d;
        }
        double var = std::max(0.0, mean_sq - mean * mean);
        double s_sum = 0.0;
        for (int nn = 0; nn < n; ++nn)
          if (!mach.in_block(nn)) s_sum += ac.s_max[nn];
        acc += var * s_sum / n;
      } else {
        double term = 0.0;
        for (int nn = 0; nn < n; ++nn) {
          if (mach.in_block(nn)) continue;
          double mean = 0.0, mean_sq = 0.0;
          for (int c = 0; c < m; ++c) {
            mach.decode(c, cfg);
            double d = 0.0;
            for (int j = 0; j < k; ++j)
              if (cfg[j] == inf_state) d += ac.d_weight(block[j], nn);
            mean += b[c] * d;
            mean_sq += b[c] * d * d;
          }
          term += ac.s_max[nn] * std::max(0.0, mean_sq - mean * mean);
        }
        acc += term / n;
      }
      if (t < horizon) {
        // advance the complement-conditioned filter: correction, prediction
        mach.complement_log_prob(ctx, t, fin.data(), zero.data());
        double shift = kNegInf;
        for (int c = 0; c < m; ++c)
          if (!zero[c]) shift = std::max(shift, fin[c]);
        if (shift == kNegInf)
          throw NumericError("theorem1_bound: conditioning simulation has probability 0");
        double norm = 0.0;
        for (int c = 0; c < m; ++c) {
          b[c] = zero[c] ? 0.0 : std::exp(fin[c] - shift) * b[c];
          norm += b[c];
        }
        if (norm <= 0.0)
          throw NumericError("theorem1_bound: conditioning simulation has probability 0");
        for (int c = 0; c < m; ++c) b[c] /= norm;
        mach.predict(ctx, t, b.data(), scratch.data());
        std::swap(b, scratch);
      }
    }
    total += acc;
  }
  return ac.a_of_eps / n * (total / n_sims);
}

}  // namespace simbacl
