#pragma once

// The adversarial minimax loop: alternating potential ascent and map descent
// with RMSProp, mini-batch estimates of the objective, optional paired
// supervision, and the unpaired shuffle protocol.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rcot/cost.hpp"
#include "rcot/degrade.hpp"
#include "rcot/errors.hpp"
#include "rcot/metrics.hpp"
#include "rcot/nets.hpp"
#include "rcot/oracle.hpp"
#include "rcot/params.hpp"
#include "rcot/rcot_map.hpp"

namespace rcot {

struct TrainConfig {
  double lr_map = 1e-4;          // transport network step size
  double lr_potential = 0.5e-4;  // potential network step size
  int n_t = 1;                   // map updates per potential update
  double gamma = 1e4;            // paired-loss weight
  int batch_size = 4;
  int epochs = 100;
  double paired_fraction = 0.0;
  CostSpec cost;
  std::uint64_t seed = 0;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  int lr_decay_epoch = 100;      // learning rates divided by lr_decay_factor after this epoch
  double lr_decay_factor = 10.0;
  double grad_clip = 0.0;        // global-norm clip, 0 disables; divergence safeguard only
  bool log_wallclock = true;     // false writes 0 to the wallclock column (reproducible logs)

  void validate() const {
    if (!(lr_map > 0.0) || !(lr_potential > 0.0))
      throw usage_error("TrainConfig: learning rates must be > 0");
    if (n_t < 1) throw usage_error("TrainConfig: n_t must be >= 1");
    if (!(gamma >= 0.0)) throw usage_error("TrainConfig: gamma must be >= 0");
    if (batch_size < 1) throw usage_error("TrainConfig: batch_size must be >= 1");
    if (epochs < 0) throw usage_error("TrainConfig: epochs must be >= 0");
    if (!(paired_fraction >= 0.0 && paired_fraction <= 1.0))
      throw usage_error("TrainConfig: paired_fraction must be in [0, 1]");
    cost.validate();
  }
};

// Per-parameter adaptive update: s <- d*s + (1-d)*g^2; p -= lr * g / (sqrt(s)+eps).
class RmsProp {
 public:
  RmsProp() = default;
  RmsProp(std::span<ParamStore* const> stores, double decay, double epsilon)
      : decay_(decay), epsilon_(epsilon) {
    for (ParamStore* s : stores)
      for (std::size_t i = 0; i < s->size(); ++i)
        sq_.emplace_back(s->entry(i).count(), 0.0);
  }

  // Applies one step from the accumulated gradients. Returns true if the
  // global-norm clip engaged (clip = 0 never clips).
  bool step(std::span<ParamStore* const> stores, double lr, double clip) {
    double scale = 1.0;
    if (clip > 0.0) {
      double norm_sq = 0.0;
      for (ParamStore* s : stores)
        for (std::size_t i = 0; i < s->size(); ++i)
          for (double g : s->entry(i).grad) norm_sq += g * g;
      const double norm = std::sqrt(norm_sq);
      if (norm > clip) scale = clip / norm;
    }
    std::size_t slot = 0;
    for (ParamStore* s : stores)
      for (std::size_t i = 0; i < s->size(); ++i) {
        auto& e = s->entry(i);
        auto& sq = sq_[slot++];
        for (std::size_t j = 0; j < e.count(); ++j) {
          const double g = e.grad[j] * scale;
          sq[j] = decay_ * sq[j] + (1.0 - decay_) * g * g;
          e.value[j] -= lr * g / (std::sqrt(sq[j]) + epsilon_);
        }
      }
    return scale != 1.0;
  }

 private:
  double decay_ = 0.9, epsilon_ = 1e-8;
  std::vector<std::vector<double>> sq_;
};

// Everything the loop mutates: the map, the potential, and optimizer state.
struct TrainState {
  RcotMap map;
  NetSpec pot_spec;
  ParamStore potential;
  TrainConfig cfg;
  RmsProp opt_map, opt_pot;
  int epoch_index = 0;  // 1-based once fit() is running; drives lr decay
  std::uint64_t clip_events = 0;

  TrainState(RcotMap m, NetSpec pot_spec_in, TrainConfig cfg_in)
      : map(std::move(m)), pot_spec(pot_spec_in),
        potential(init_params(pot_spec_in, cfg_in.seed + 101)), cfg(cfg_in) {
    cfg.validate();
    auto ms = map.param_stores();
    opt_map = RmsProp(ms, cfg.rms_decay, cfg.rms_epsilon);
    ParamStore* ps[] = {&potential};
    opt_pot = RmsProp(ps, cfg.rms_decay, cfg.rms_epsilon);
  }
};

inline double current_lr(const TrainState& st, double base) {
  if (st.cfg.lr_decay_epoch > 0 && st.epoch_index > st.cfg.lr_decay_epoch)
    return base / st.cfg.lr_decay_factor;
  return base;
}

// Mini-batch estimate of the full minimax objective
//   E_x[phi(x)] + E_y[c(T(y), y) + g(y - T(y)) - phi(T(y))]
// built on a tape, differentiable with respect to both parameter sets.
inline ad::Var loss_frot_var(ad::Tape& t, RcotMap& map, const NetSpec& pot_spec,
                             ParamStore& potential,
                             std::span<const ImageTensor> batch_y,
                             std::span<const ImageTensor> batch_x,
                             const CostSpec& spec,
                             bool freeze_map = false, bool freeze_potential = false) {
  if (batch_y.empty() || batch_x.empty())
    throw usage_error("loss_frot: empty batch");
  spec.validate();
  std::vector<ad::Var> terms_x, terms_y;
  for (const auto& x : batch_x)
    terms_x.push_back(potential_forward(t, pot_spec, potential, t.leaf(x),
                                        freeze_potential));
  for (const auto& y : batch_y) {
    ad::Var yv = t.leaf(y);
    ad::Var ty = map.apply_var(t, yv, freeze_map);
    ad::Var diff = t.sub(ty, yv);
    ad::Var c = spec.base == BaseCost::L2 ? t.sqrt_of(t.sumsq(diff)) : t.sumsq(diff);
    ad::Var term = c;
    if (spec.penalty != PenaltyKind::None && spec.weight > 0.0) {
      ad::Var g = t.freq_penalty_node(t.sub(yv, ty), spec.penalty);
      term = t.add(term, t.scale(g, spec.weight));
    }
    ad::Var pot_ty = potential_forward(t, pot_spec, potential, ty, freeze_potential);
    terms_y.push_back(t.add(term, t.scale(pot_ty, -1.0)));
  }
  return t.add(t.mean_of(terms_x), t.mean_of(terms_y));
}

inline double loss_frot(RcotMap& map, const NetSpec& pot_spec, ParamStore& potential,
                        std::span<const ImageTensor> batch_y,
                        std::span<const ImageTensor> batch_x, const CostSpec& spec) {
  ad::Tape t;
  return t.value_scalar(loss_frot_var(t, map, pot_spec, potential, batch_y, batch_x,
                                      spec, /*freeze_map=*/true,
                                      /*freeze_potential=*/true));
}

// gamma * mean over pairs of ||T(y) - x||^2.
inline double loss_paired(RcotMap& map,
                          std::span<const std::pair<ImageTensor, ImageTensor>> pairs,
                          double gamma) {
  if (!(gamma >= 0.0)) throw usage_error("loss_paired: gamma must be >= 0");
  if (gamma == 0.0) return 0.0;
  if (pairs.empty()) throw usage_error("loss_paired: empty pair set");
  double acc = 0.0;
  for (const auto& [y, x] : pairs) {
    const ImageTensor d = sub(map.apply(y), x);
    double s = 0.0;
    for (double v : d.data()) s += v * v;
    acc += s;
  }
  return gamma * acc / static_cast<double>(pairs.size());
}

// One potential update: descend L(w) = mean phi(T(y)) - mean phi(x).
// T(y) is evaluated outside the tape, so map parameters (values and gradient
// slots alike) are untouched. Throws divergence_error on a non-finite loss,
// leaving the state as it was.
inline double potential_step(TrainState& st, std::span<const ImageTensor> batch_y,
                             std::span<const ImageTensor> batch_x) {
  if (batch_y.empty() || batch_x.empty())
    throw usage_error("potential_step: empty batch");
  st.potential.zero_grads();
  ad::Tape t;
  std::vector<ad::Var> ty_terms, x_terms;
  for (const auto& y : batch_y) {
    const ImageTensor ty = st.map.apply(y);
    ty_terms.push_back(potential_forward(t, st.pot_spec, st.potential, t.leaf(ty)));
  }
  for (const auto& x : batch_x)
    x_terms.push_back(potential_forward(t, st.pot_spec, st.potential, t.leaf(x)));
  ad::Var loss = t.sub(t.mean_of(ty_terms), t.mean_of(x_terms));
  const double value = t.value_scalar(loss);
  if (!std::isfinite(value))
    throw divergence_error("potential_step: non-finite loss " + std::to_string(value));
  t.backward(loss);
  ParamStore* ps[] = {&st.potential};
  if (st.opt_pot.step(ps, current_lr(st, st.cfg.lr_potential), st.cfg.grad_clip))
    ++st.clip_events;
  return value;
}

// n_t map updates: descend L(theta) = mean[c + g - phi(T(y))] plus, when
// pairs are present, gamma/|P| sum ||T(y) - x||^2. Potential parameters are
// bound frozen so their values and gradient slots stay untouched.
inline double map_step(TrainState& st, std::span<const ImageTensor> batch_y,
                       std::span<const std::pair<ImageTensor, ImageTensor>> pairs) {
  if (batch_y.empty()) throw usage_error("map_step: empty batch");
  auto stores = st.map.param_stores();
  double value = 0.0;
  for (int it = 0; it < st.cfg.n_t; ++it) {
    for (ParamStore* s : stores) s->zero_grads();
    ad::Tape t;
    std::vector<ad::Var> terms;
    for (const auto& y : batch_y) {
      ad::Var yv = t.leaf(y);
      ad::Var ty = st.map.apply_var(t, yv);
      ad::Var diff = t.sub(ty, yv);
      ad::Var c = st.cfg.cost.base == BaseCost::L2 ? t.sqrt_of(t.sumsq(diff))
                                                   : t.sumsq(diff);
      ad::Var term = c;
      if (st.cfg.cost.penalty != PenaltyKind::None && st.cfg.cost.weight > 0.0)
        term = t.add(term, t.scale(t.freq_penalty_node(t.sub(yv, ty),
                                                       st.cfg.cost.penalty),
                                   st.cfg.cost.weight));
      ad::Var pot_ty = potential_forward(t, st.pot_spec, st.potential, ty,
                                         /*frozen=*/true);
      terms.push_back(t.add(term, t.scale(pot_ty, -1.0)));
    }
    ad::Var loss = t.mean_of(terms);
    if (!pairs.empty() && st.cfg.gamma > 0.0) {
      std::vector<ad::Var> sq_terms;
      for (const auto& [y, x] : pairs) {
        ad::Var ty = st.map.apply_var(t, t.leaf(y));
        sq_terms.push_back(t.sumsq(t.sub(ty, t.leaf(x))));
      }
      loss = t.add(loss, t.scale(t.mean_of(sq_terms), st.cfg.gamma));
    }
    value = t.value_scalar(loss);
    if (!std::isfinite(value))
      throw divergence_error("map_step: non-finite loss " + std::to_string(value));
    t.backward(loss);
    if (st.opt_map.step(stores, current_lr(st, st.cfg.lr_map), st.cfg.grad_clip))
      ++st.clip_events;
  }
  return value;
}

struct EpochRecord {
  int epoch = 0;
  double loss_frot = 0.0;
  double loss_paired = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double spectrum_gini = 0.0;
  double wallclock_s = 0.0;
};

struct FitResult {
  std::vector<EpochRecord> history;
  bool diverged = false;
  std::string message;
};

struct FitOptions {
  // Held-out (degraded, clean) pairs for per-epoch metric snapshots.
  std::vector<std::pair<ImageTensor, ImageTensor>> eval_pairs;
  // Test hook observing the per-batch index streams.
  std::function<void(int epoch, std::span<const std::size_t> y_idx,
                     std::span<const std::size_t> x_idx)> batch_observer;
};

namespace detail {
inline double nan_metric() { return std::numeric_limits<double>::quiet_NaN(); }
}  // namespace detail

// Algorithm: per batch, one potential update then n_t map updates, repeated
// for the epoch budget. Degraded and clean streams are reshuffled
// independently every epoch. Deterministic for a fixed (config, data, seed)
// under single-threaded execution. Two consecutive non-finite losses abort
// with the partial history.
inline FitResult fit(TrainState& st, const DatasetHandle& data,
                     const FitOptions& opts = {}) {
  st.cfg.validate();
  if (data.clean_count() == 0 || data.degraded_count() == 0)
    throw usage_error("fit: empty dataset");
  FitResult result;
  std::mt19937_64 rng(st.cfg.seed);
  const std::size_t ny = data.degraded_count(), nx = data.clean_count();
  const auto b = static_cast<std::size_t>(st.cfg.batch_size);
  int consecutive_divergence = 0;

  for (int epoch = 1; epoch <= st.cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    st.epoch_index = epoch;
    std::vector<std::size_t> order_y(ny), order_x(nx);
    std::iota(order_y.begin(), order_y.end(), 0);
    std::iota(order_x.begin(), order_x.end(), 0);
    std::shuffle(order_y.begin(), order_y.end(), rng);
    std::shuffle(order_x.begin(), order_x.end(), rng);

    double frot_sum = 0.0, paired_sum = 0.0;
    std::size_t batches = 0;
    const std::size_t steps = std::max<std::size_t>(1, std::min(ny, nx) / b);
    bool aborted = false;
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<ImageTensor> by, bx;
      std::vector<std::size_t> iy, ix;
      std::vector<std::pair<ImageTensor, ImageTensor>> pairs;
      for (std::size_t k = 0; k < b; ++k) {
        const std::size_t yi = order_y[(s * b + k) % ny];
        const std::size_t xi = order_x[(s * b + k) % nx];
        by.push_back(data.degraded(yi));
        bx.push_back(data.clean(xi));
        iy.push_back(yi);
        ix.push_back(xi);
        if (auto ci = data.paired_clean_index(yi))
          pairs.emplace_back(data.degraded(yi), data.clean(*ci));
      }
      if (opts.batch_observer) opts.batch_observer(epoch, iy, ix);
      try {
        potential_step(st, by, bx);
        map_step(st, by, pairs);
        consecutive_divergence = 0;
      } catch (const divergence_error& e) {
        if (++consecutive_divergence >= 2) {
          result.diverged = true;
          result.message = e.what();
          aborted = true;
          break;
        }
        continue;
      }
      frot_sum += loss_frot(st.map, st.pot_spec, st.potential, by, bx, st.cfg.cost);
      if (!pairs.empty() && st.cfg.gamma > 0.0)
        paired_sum += loss_paired(st.map, pairs, st.cfg.gamma);
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_frot = batches ? frot_sum / static_cast<double>(batches)
                            : detail::nan_metric();
    rec.loss_paired = batches ? paired_sum / static_cast<double>(batches) : 0.0;
    rec.psnr = rec.ssim = rec.spectrum_gini = detail::nan_metric();
    if (!opts.eval_pairs.empty()) {
      double ps = 0.0, ss = 0.0, gi = 0.0;
      bool ssim_ok = opts.eval_pairs[0].first.height() >= 8 &&
                     opts.eval_pairs[0].first.width() >= 8;
      for (const auto& [y, x] : opts.eval_pairs) {
        const ImageTensor ty = st.map.apply(y);
        ps += psnr(ty, x, 1.0);
        if (ssim_ok) ss += ssim(ty, x);
        gi += spectrum_stats(sub(y, ty)).first;
      }
      const auto ne = static_cast<double>(opts.eval_pairs.size());
      rec.psnr = ps / ne;
      rec.ssim = ssim_ok ? ss / ne : detail::nan_metric();
      rec.spectrum_gini = gi / ne;
    }
    rec.wallclock_s =
        st.cfg.log_wallclock
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                  .count()
            : 0.0;
    result.history.push_back(rec);
    if (aborted) break;
  }
  return result;
}

// Point-experiment datasets: samples stored as (1, 1, d) tensors with the
// source distribution on the degraded side and the target on the clean side.

inline DatasetHandle make_uniform_1d_dataset(std::size_t n, double src_lo,
                                             double src_hi, double tgt_lo,
                                             double tgt_hi, std::uint64_t seed) {
  if (n == 0) throw usage_error("make_uniform_1d_dataset: n must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> us(src_lo, src_hi), ut(tgt_lo, tgt_hi);
  std::vector<ImageTensor> src, tgt;
  for (std::size_t i = 0; i < n; ++i)
    src.emplace_back(1, 1, 1, std::vector<double>{us(rng)});
  for (std::size_t i = 0; i < n; ++i)
    tgt.emplace_back(1, 1, 1, std::vector<double>{ut(rng)});
  return DatasetHandle(std::move(tgt), std::move(src),
                       std::vector<std::ptrdiff_t>(n, -1), 0.0);
}

inline DatasetHandle make_gaussian_dataset(std::size_t n, const GaussianParams& src,
                                           const GaussianParams& tgt,
                                           std::uint64_t seed) {
  if (n == 0) throw usage_error("make_gaussian_dataset: n must be > 0");
  if (src.mean.size() != tgt.mean.size())
    throw dimension_error("make_gaussian_dataset: dimension mismatch");
  std::mt19937_64 rng(seed);
  const std::size_t d = src.mean.size();
  auto s = sample_gaussian(src, n, rng);
  auto t = sample_gaussian(tgt, n, rng);
  std::vector<ImageTensor> src_t, tgt_t;
  for (auto& v : s) src_t.emplace_back(1, 1, d, std::move(v));
  for (auto& v : t) tgt_t.emplace_back(1, 1, d, std::move(v));
  return DatasetHandle(std::move(tgt_t), std::move(src_t),
                       std::vector<std::ptrdiff_t>(n, -1), 0.0);
}

}  // namespace rcot
