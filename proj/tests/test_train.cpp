#include "rcot/train.hpp"

#include <gtest/gtest.h>

#include <random>

#include "rcot/oracle.hpp"
#include "support/test_util.hpp"

using rcot::BaseCost;
using rcot::CostSpec;
using rcot::DatasetHandle;
using rcot::ImageTensor;
using rcot::NetArch;
using rcot::NetSpec;
using rcot::PenaltyKind;
using rcot::RcotMap;
using rcot::TrainConfig;
using rcot::TrainState;
using rcot::ad::Tape;
using rcot::ad::Var;
using rcot_test::random_tensor;

namespace {

TrainState make_state(NetArch arch, int h, int w, TrainConfig cfg,
                      std::uint64_t seed = 100) {
  const NetSpec gs = rcot::make_generator_spec(arch, 1, h, w, 4);
  const NetSpec es = rcot::make_encoder_spec(arch, 1, h, w, 4, gs.cond_width);
  const NetSpec ps = rcot::make_potential_spec(arch, 1, h, w, 4);
  return TrainState(RcotMap(gs, es, seed), ps, cfg);
}

void randomize_state(TrainState& st, std::mt19937_64& rng, double scale = 0.3) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto* store : st.map.param_stores())
    for (std::size_t e = 0; e < store->size(); ++e)
      for (double& v : store->entry(e).value) v = u(rng);
  for (std::size_t e = 0; e < st.potential.size(); ++e)
    for (double& v : st.potential.entry(e).value) v = u(rng);
}

std::vector<double> snapshot(const rcot::ParamStore& p) {
  std::vector<double> out;
  for (std::size_t e = 0; e < p.size(); ++e)
    out.insert(out.end(), p.entry(e).value.begin(), p.entry(e).value.end());
  return out;
}

}  // namespace

TEST(Losses, DegenerateIdentityBatchGivesZero) {
  TrainConfig cfg;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  for (auto* store : st.map.param_stores())
    for (std::size_t e = 0; e < store->size(); ++e)
      std::fill(store->entry(e).value.begin(), store->entry(e).value.end(), 0.0);
  for (std::size_t e = 0; e < st.potential.size(); ++e)
    std::fill(st.potential.entry(e).value.begin(), st.potential.entry(e).value.end(), 0.0);
  // zero nets map zero inputs to zero: every term of the objective vanishes
  const std::vector<ImageTensor> zeros(3, ImageTensor(1, 8, 8));
  const CostSpec spec{BaseCost::L2, PenaltyKind::L2, 1.0};
  EXPECT_EQ(rcot::loss_frot(st.map, st.pot_spec, st.potential, zeros, zeros, spec), 0.0);
}

// A constant potential cancels between the two expectation terms.
TEST(Losses, ConstantPotentialCancels) {
  std::mt19937_64 rng(3);
  TrainConfig cfg;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  randomize_state(st, rng);
  // potential == k: zero every potential weight, set the output bias
  for (std::size_t e = 0; e < st.potential.size(); ++e)
    std::fill(st.potential.entry(e).value.begin(), st.potential.entry(e).value.end(), 0.0);
  st.potential.at("out.b").value[0] = 4.2;

  std::vector<ImageTensor> ys, xs;
  for (int i = 0; i < 3; ++i) ys.push_back(random_tensor(1, 8, 8, rng));
  for (int i = 0; i < 3; ++i) xs.push_back(random_tensor(1, 8, 8, rng));
  const CostSpec spec{BaseCost::L2, PenaltyKind::L1, 0.1};

  double mean_cost = 0.0;
  for (const auto& y : ys)
    mean_cost += rcot::frot_cost(st.map.apply(y), y, spec) / 3.0;
  EXPECT_NEAR(rcot::loss_frot(st.map, st.pot_spec, st.potential, ys, xs, spec),
              mean_cost, 1e-10);
}

TEST(Losses, FrotMatchesManualComposition) {
  std::mt19937_64 rng(5);
  TrainConfig cfg;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  randomize_state(st, rng);
  std::vector<ImageTensor> ys, xs;
  for (int i = 0; i < 2; ++i) ys.push_back(random_tensor(1, 8, 8, rng));
  for (int i = 0; i < 3; ++i) xs.push_back(random_tensor(1, 8, 8, rng));
  const CostSpec spec{BaseCost::L2, PenaltyKind::L2, 0.5};

  double manual = 0.0;
  for (const auto& x : xs)
    manual += rcot::potential_eval(st.pot_spec, st.potential, x) / 3.0;
  for (const auto& y : ys) {
    const ImageTensor ty = st.map.apply(y);
    manual += (rcot::frot_cost(ty, y, spec) -
               rcot::potential_eval(st.pot_spec, st.potential, ty)) / 2.0;
  }
  EXPECT_NEAR(rcot::loss_frot(st.map, st.pot_spec, st.potential, ys, xs, spec),
              manual, 1e-9);
}

TEST(Losses, PairedPerfectFitIsZero) {
  std::mt19937_64 rng(7);
  TrainConfig cfg;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  randomize_state(st, rng);
  std::vector<std::pair<ImageTensor, ImageTensor>> pairs;
  for (int i = 0; i < 2; ++i) {
    const ImageTensor y = random_tensor(1, 8, 8, rng);
    pairs.emplace_back(y, st.map.apply(y));
  }
  EXPECT_EQ(rcot::loss_paired(st.map, pairs, 1e4), 0.0);
}

TEST(Losses, PairedZeroGammaDisables) {
  TrainConfig cfg;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  EXPECT_EQ(rcot::loss_paired(st.map, {}, 0.0), 0.0);
}

TEST(Losses, PairedSinglePairScalarOracle) {
  std::mt19937_64 rng(11);
  TrainConfig cfg;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  randomize_state(st, rng);
  const ImageTensor y = random_tensor(1, 8, 8, rng);
  const ImageTensor x = random_tensor(1, 8, 8, rng);
  const ImageTensor ty = st.map.apply(y);
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = ty.data()[i] - x.data()[i];
    ss += d * d;
  }
  std::vector<std::pair<ImageTensor, ImageTensor>> pairs{{y, x}};
  EXPECT_NEAR(rcot::loss_paired(st.map, pairs, 1e4), 1e4 * ss, 1e-6 * (1.0 + 1e4 * ss));
}

TEST(Losses, EmptyBatchRejected) {
  TrainConfig cfg;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  const std::vector<ImageTensor> none;
  const std::vector<ImageTensor> one{ImageTensor(1, 8, 8)};
  EXPECT_THROW(rcot::loss_frot(st.map, st.pot_spec, st.potential, none, one, CostSpec{}),
               rcot::usage_error);
  EXPECT_THROW(rcot::loss_paired(st.map, {}, 1.0), rcot::usage_error);
}

TEST(Optimizer, ZeroLearningRateFreezesParameters) {
  rcot::ParamStore p;
  p.add("w", {4}).value = {1.0, -2.0, 3.0, 0.5};
  for (double& g : p.at("w").grad) g = 1.0;
  rcot::ParamStore* stores[] = {&p};
  rcot::RmsProp opt(stores, 0.9, 1e-8);
  const std::vector<double> before = p.at("w").value;
  opt.step(stores, 0.0, 0.0);
  EXPECT_EQ(p.at("w").value, before);
}

TEST(Steps, PotentialStepLeavesMapBitwiseUntouched) {
  std::mt19937_64 rng(13);
  TrainConfig cfg;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  randomize_state(st, rng);
  std::vector<ImageTensor> ys{random_tensor(1, 8, 8, rng)};
  std::vector<ImageTensor> xs{random_tensor(1, 8, 8, rng)};
  const auto t1_before = snapshot(st.map.theta1());
  const auto t2_before = snapshot(st.map.theta2());
  const auto pot_before = snapshot(st.potential);
  rcot::potential_step(st, ys, xs);
  EXPECT_EQ(snapshot(st.map.theta1()), t1_before);
  EXPECT_EQ(snapshot(st.map.theta2()), t2_before);
  EXPECT_NE(snapshot(st.potential), pot_before);
}

TEST(Steps, MapStepLeavesPotentialBitwiseUntouched) {
  std::mt19937_64 rng(17);
  TrainConfig cfg;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  randomize_state(st, rng);
  std::vector<ImageTensor> ys{random_tensor(1, 8, 8, rng)};
  const auto pot_before = snapshot(st.potential);
  const auto pot_grad_before = st.potential.at("out.w").grad;
  const auto t1_before = snapshot(st.map.theta1());
  rcot::map_step(st, ys, {});
  EXPECT_EQ(snapshot(st.potential), pot_before);
  EXPECT_EQ(st.potential.at("out.w").grad, pot_grad_before);
  EXPECT_NE(snapshot(st.map.theta1()), t1_before);
}

// Gradient directions of both steps against finite differences of their
// stated objectives.
TEST(Steps, StepGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(19);
  TrainConfig cfg;
  cfg.cost = CostSpec{BaseCost::L2, PenaltyKind::L2, 0.2};
  TrainState st = make_state(NetArch::Mlp, 1, 2, cfg);
  randomize_state(st, rng);
  std::vector<ImageTensor> ys, xs;
  for (int i = 0; i < 3; ++i) ys.push_back(random_tensor(1, 1, 2, rng));
  for (int i = 0; i < 3; ++i) xs.push_back(random_tensor(1, 1, 2, rng));

  // potential objective: mean phi(T(y)) - mean phi(x)
  {
    st.potential.zero_grads();
    Tape t;
    std::vector<Var> ty_terms, x_terms;
    for (const auto& y : ys)
      ty_terms.push_back(rcot::potential_forward(t, st.pot_spec, st.potential,
                                                 t.leaf(st.map.apply(y))));
    for (const auto& x : xs)
      x_terms.push_back(rcot::potential_forward(t, st.pot_spec, st.potential,
                                                t.leaf(x)));
    t.backward(t.sub(t.mean_of(ty_terms), t.mean_of(x_terms)));
    std::vector<rcot::ParamStore*> stores{&st.potential};
    auto loss = [&]() {
      double acc = 0.0;
      for (const auto& y : ys)
        acc += rcot::potential_eval(st.pot_spec, st.potential, st.map.apply(y)) / 3.0;
      for (const auto& x : xs)
        acc -= rcot::potential_eval(st.pot_spec, st.potential, x) / 3.0;
      return acc;
    };
    EXPECT_LE(rcot_test::max_fd_rel_error(stores, loss), 1e-4);
  }

  // map objective: mean[c + g - phi(T(y))]
  {
    for (auto* s : st.map.param_stores()) s->zero_grads();
    Tape t;
    std::vector<Var> terms;
    for (const auto& y : ys) {
      Var yv = t.leaf(y);
      Var ty = st.map.apply_var(t, yv);
      Var diff = t.sub(ty, yv);
      Var term = t.sqrt_of(t.sumsq(diff));
      term = t.add(term, t.scale(t.freq_penalty_node(t.sub(yv, ty), PenaltyKind::L2), 0.2));
      Var pot = rcot::potential_forward(t, st.pot_spec, st.potential, ty, true);
      terms.push_back(t.add(term, t.scale(pot, -1.0)));
    }
    t.backward(t.mean_of(terms));
    std::vector<rcot::ParamStore*> stores = st.map.param_stores();
    auto loss = [&]() {
      double acc = 0.0;
      for (const auto& y : ys) {
        const ImageTensor ty = st.map.apply(y);
        acc += (rcot::frot_cost(ty, y, st.cfg.cost) -
                rcot::potential_eval(st.pot_spec, st.potential, ty)) / 3.0;
      }
      return acc;
    };
    rcot_test::FdMismatch miss;
    const double worst = rcot_test::max_fd_rel_error(stores, loss, 1e-5, 1e-8, &miss);
    EXPECT_LE(worst, 1e-4) << miss.entry << "[" << miss.index << "]";
  }
}

// Replacing phi by phi + k must leave the map gradient unchanged.
TEST(Steps, ConstantPotentialShiftLeavesMapGradientInvariant) {
  std::mt19937_64 rng(23);
  TrainConfig cfg;
  cfg.cost = CostSpec{BaseCost::SquaredL2, PenaltyKind::None, 0.0};
  TrainState st = make_state(NetArch::Mlp, 1, 2, cfg);
  randomize_state(st, rng);
  std::vector<ImageTensor> ys{random_tensor(1, 1, 2, rng), random_tensor(1, 1, 2, rng)};

  auto map_grads = [&]() {
    for (auto* s : st.map.param_stores()) s->zero_grads();
    Tape t;
    std::vector<Var> terms;
    for (const auto& y : ys) {
      Var yv = t.leaf(y);
      Var ty = st.map.apply_var(t, yv);
      Var term = t.sumsq(t.sub(ty, yv));
      terms.push_back(t.add(term, t.scale(
          rcot::potential_forward(t, st.pot_spec, st.potential, ty, true), -1.0)));
    }
    t.backward(t.mean_of(terms));
    std::vector<double> out;
    for (auto* s : st.map.param_stores())
      for (std::size_t e = 0; e < s->size(); ++e)
        out.insert(out.end(), s->entry(e).grad.begin(), s->entry(e).grad.end());
    return out;
  };

  const auto base = map_grads();
  st.potential.at("out.b").value[0] += 3.7;  // phi -> phi + k
  const auto shifted = map_grads();
  ASSERT_EQ(base.size(), shifted.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double denom = std::max(1e-12, std::abs(base[i]));
    EXPECT_LE(std::abs(base[i] - shifted[i]) / denom, 1e-10);
  }
}

// One-parameter diagnostic: T(y) = a*y between N(0,1) and N(0,4) under the
// squared cost with the exact dual phi(x) = x^2/2 drives a to 2.
TEST(Steps, ScalarDiagnosticConvergesToTwo) {
  rcot::ParamStore p;
  p.add("a", {1, 1}).value = {0.5};
  rcot::ParamStore* stores[] = {&p};
  rcot::RmsProp opt(stores, 0.9, 1e-8);
  std::mt19937_64 rng(29);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int step = 0; step < 3000; ++step) {
    p.zero_grads();
    Tape t;
    std::vector<Var> terms;
    for (int i = 0; i < 16; ++i) {
      const ImageTensor y(1, 1, 1, {gauss(rng)});
      Var yv = t.leaf(y);
      Var ty = t.dense(yv, t.param(p, "a"), {});
      Var cost = t.sumsq(t.sub(ty, t.reshape(yv, {1})));
      Var phi = t.scale(t.sumsq(ty), 0.5);  // exact dual x^2/2
      terms.push_back(t.sub(cost, phi));
    }
    t.backward(t.mean_of(terms));
    opt.step(stores, 5e-3, 0.0);
  }
  EXPECT_NEAR(p.at("a").value[0], 2.0, 1e-2);
}

TEST(Fit, ZeroEpochsIsNoOp) {
  TrainConfig cfg;
  cfg.epochs = 0;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  const auto before = snapshot(st.map.theta1());
  std::vector<ImageTensor> clean{ImageTensor(1, 8, 8)};
  const DatasetHandle data(clean, clean, {0}, 1.0);
  const auto result = rcot::fit(st, data);
  EXPECT_TRUE(result.history.empty());
  EXPECT_FALSE(result.diverged);
  EXPECT_EQ(snapshot(st.map.theta1()), before);
}

TEST(Fit, DeterministicHistoryAcrossReruns) {
  std::mt19937_64 rng(31);
  std::vector<ImageTensor> clean;
  for (int i = 0; i < 8; ++i) clean.push_back(random_tensor(1, 8, 8, rng));
  rcot::DegradationSpec d;
  d.sigma = 50.0;
  d.seed = 4;

  auto run = [&]() {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.lr_map = 1e-3;
    cfg.lr_potential = 5e-4;
    cfg.gamma = 10.0;
    cfg.paired_fraction = 0.5;
    cfg.seed = 9;
    cfg.log_wallclock = false;
    TrainState st = make_state(NetArch::Conv, 8, 8, cfg, 77);
    const DatasetHandle data = rcot::build_dataset(clean, d, 0.5, 21);
    return rcot::fit(st, data);
  };
  const auto r1 = run();
  const auto r2 = run();
  ASSERT_EQ(r1.history.size(), r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i) {
    EXPECT_EQ(r1.history[i].loss_frot, r2.history[i].loss_frot);
    EXPECT_EQ(r1.history[i].loss_paired, r2.history[i].loss_paired);
  }
}

// With paired_fraction zero, the clean and degraded index streams must not be
// positionally locked.
TEST(Fit, UnpairedStreamsAreDecorrelated) {
  std::mt19937_64 rng(37);
  std::vector<ImageTensor> clean;
  for (int i = 0; i < 16; ++i) clean.push_back(random_tensor(1, 8, 8, rng));
  rcot::DegradationSpec d;
  d.sigma = 25.0;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.lr_map = 1e-4;
  cfg.lr_potential = 1e-4;
  cfg.seed = 3;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg, 5);
  const DatasetHandle data = rcot::build_dataset(clean, d, 0.0, 11);

  std::size_t aligned = 0, total = 0;
  rcot::FitOptions opts;
  opts.batch_observer = [&](int, std::span<const std::size_t> ys,
                            std::span<const std::size_t> xs) {
    for (std::size_t i = 0; i < ys.size(); ++i) {
      total += 1;
      if (ys[i] == xs[i]) aligned += 1;
    }
  };
  rcot::fit(st, data, opts);
  ASSERT_GT(total, 0u);
  // independent shuffles collide on a given slot with probability 1/16
  EXPECT_LT(static_cast<double>(aligned) / static_cast<double>(total), 0.5);
  EXPECT_EQ(data.paired_count(), 0u);
}

TEST(Fit, DivergenceAbortsWithPartialHistory) {
  std::mt19937_64 rng(41);
  std::vector<ImageTensor> clean;
  for (int i = 0; i < 8; ++i) clean.push_back(random_tensor(1, 8, 8, rng));
  rcot::DegradationSpec d;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  TrainState st = make_state(NetArch::Conv, 8, 8, cfg);
  // poison one weight so the first map losses overflow to non-finite
  st.map.theta1().at("out.w").value[0] = 1e200;
  st.potential.at("out.w").value[0] = 1e200;
  const DatasetHandle data = rcot::build_dataset(clean, d, 0.0, 1);
  const auto result = rcot::fit(st, data);
  EXPECT_TRUE(result.diverged);
  EXPECT_FALSE(result.message.empty());
  EXPECT_LE(result.history.size(), 3u);
}

// Proposition recovery, 1-D: uniform quantile task learned to grid accuracy.
// The sample count keeps the empirical target's quantile noise well under the
// tolerance (KS distance about 1/sqrt(n)).
TEST(Fit, QuantileTaskLearnsTranslation) {
  const DatasetHandle data =
      rcot::make_uniform_1d_dataset(4096, 0.0, 1.0, 2.0, 3.0, 13);
  const NetSpec gs = rcot::make_generator_spec(NetArch::Mlp, 1, 1, 1, 32);
  const NetSpec es = rcot::make_encoder_spec(NetArch::Mlp, 1, 1, 1, 32, gs.cond_width);
  const NetSpec ps = rcot::make_potential_spec(NetArch::Mlp, 1, 1, 1, 32);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 64;
  cfg.lr_map = 1e-3;
  cfg.lr_potential = 1e-3;
  cfg.lr_decay_epoch = 30;
  cfg.cost = CostSpec{BaseCost::SquaredL2, PenaltyKind::None, 0.0};
  cfg.gamma = 0.0;
  cfg.seed = 8;
  TrainState st = TrainState(RcotMap(gs, es, 21), ps, cfg);
  const auto result = rcot::fit(st, data);
  ASSERT_FALSE(result.diverged);
  double max_err = 0.0;
  for (double x = 0.05; x <= 0.951; x += 0.05) {
    const ImageTensor y(1, 1, 1, {x});
    max_err = std::max(max_err, std::abs(st.map.apply(y).at(0, 0, 0) - (x + 2.0)));
  }
  EXPECT_LE(max_err, 0.05);
}
