#include "rcot/nets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/test_util.hpp"

using rcot::ImageTensor;
using rcot::NetArch;
using rcot::NetSpec;
using rcot::ParamStore;
using rcot::ad::Activation;
using rcot::ad::Tape;
using rcot::ad::Var;
using rcot_test::random_tensor;

namespace {

void randomize(ParamStore& p, std::mt19937_64& rng, double scale = 0.4) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (std::size_t e = 0; e < p.size(); ++e)
    for (double& v : p.entry(e).value) v = u(rng);
}

}  // namespace

TEST(Nets, InitIsDeterministicPerSeed) {
  const NetSpec spec = rcot::make_generator_spec(NetArch::Conv, 1, 8, 8, 4);
  ParamStore a = rcot::init_params(spec, 42);
  ParamStore b = rcot::init_params(spec, 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t e = 0; e < a.size(); ++e)
    EXPECT_EQ(a.entry(e).value, b.entry(e).value);
}

TEST(Nets, DifferentSeedsDiffer) {
  const NetSpec spec = rcot::make_generator_spec(NetArch::Mlp, 1, 1, 2, 16);
  ParamStore a = rcot::init_params(spec, 1);
  ParamStore b = rcot::init_params(spec, 2);
  bool any_diff = false;
  for (std::size_t e = 0; e < a.size() && !any_diff; ++e)
    any_diff = a.entry(e).value != b.entry(e).value;
  EXPECT_TRUE(any_diff);
}

TEST(Nets, BiasesZeroAtInit) {
  for (auto spec : {rcot::make_generator_spec(NetArch::Conv, 1, 8, 8, 4),
                    rcot::make_encoder_spec(NetArch::Conv, 1, 8, 8, 4, 8),
                    rcot::make_potential_spec(NetArch::Conv, 1, 8, 8, 4)}) {
    ParamStore p = rcot::init_params(spec, 7);
    for (std::size_t e = 0; e < p.size(); ++e) {
      const auto& entry = p.entry(e);
      if (entry.name.ends_with(".b"))
        for (double v : entry.value) EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(Nets, ZeroParamsGiveZeroResponse) {
  std::mt19937_64 rng(3);
  const ImageTensor y = random_tensor(1, 8, 8, rng);
  for (auto arch : {NetArch::Conv, NetArch::Mlp}) {
    const NetSpec gs = rcot::make_generator_spec(arch, 1, 8, 8, 4);
    ParamStore gp = rcot::init_params(gs, 5);
    for (std::size_t e = 0; e < gp.size(); ++e)
      std::fill(gp.entry(e).value.begin(), gp.entry(e).value.end(), 0.0);
    const ImageTensor out = rcot::generator_eval(gs, gp, y);
    for (double v : out.data()) EXPECT_EQ(v, 0.0);

    const NetSpec es = rcot::make_encoder_spec(arch, 1, 8, 8, 4, 6);
    ParamStore ep = rcot::init_params(es, 5);
    for (std::size_t e = 0; e < ep.size(); ++e)
      std::fill(ep.entry(e).value.begin(), ep.entry(e).value.end(), 0.0);
    for (double v : rcot::encoder_eval(es, ep, y)) EXPECT_EQ(v, 0.0);

    const NetSpec ps = rcot::make_potential_spec(arch, 1, 8, 8, 4);
    ParamStore pp = rcot::init_params(ps, 5);
    for (std::size_t e = 0; e < pp.size(); ++e)
      std::fill(pp.entry(e).value.begin(), pp.entry(e).value.end(), 0.0);
    EXPECT_EQ(rcot::potential_eval(ps, pp, y), 0.0);
  }
}

TEST(Nets, ZeroConditionEqualsAbsentCondition) {
  std::mt19937_64 rng(11);
  for (auto arch : {NetArch::Conv, NetArch::Mlp}) {
    const NetSpec gs = rcot::make_generator_spec(arch, 1, 8, 8, 4);
    ParamStore gp = rcot::init_params(gs, 9);
    const ImageTensor y = random_tensor(1, 8, 8, rng);
    const std::vector<double> zero_cond(gs.cond_width, 0.0);
    const ImageTensor with_zero = rcot::generator_eval(gs, gp, y, zero_cond);
    const ImageTensor absent = rcot::generator_eval(gs, gp, y);
    for (std::size_t i = 0; i < absent.size(); ++i)
      EXPECT_EQ(with_zero.data()[i], absent.data()[i]);
  }
}

TEST(Nets, ConditionLengthMismatchThrows) {
  const NetSpec gs = rcot::make_generator_spec(NetArch::Conv, 1, 8, 8, 4);
  ParamStore gp = rcot::init_params(gs, 1);
  Tape t;
  Var y = t.leaf(ImageTensor(1, 8, 8));
  Var bad_cond = t.leaf_vec(std::vector<double>(gs.cond_width + 1, 0.0));
  EXPECT_THROW(rcot::generator_forward(t, gs, gp, y, bad_cond),
               rcot::dimension_error);
}

// Independent scalar recomputation of the MLP forward pass.
TEST(Nets, MlpForwardMatchesScalarLoop) {
  std::mt19937_64 rng(13);
  const NetSpec gs = rcot::make_generator_spec(NetArch::Mlp, 1, 1, 2, 8);
  ParamStore p = rcot::init_params(gs, 21);
  randomize(p, rng);
  const ImageTensor y(1, 1, 2, {0.3, -0.7});

  auto dense_ref = [&](const std::vector<double>& in, const std::string& name) {
    const auto& w = p.at(name + ".w");
    const auto& b = p.at(name + ".b");
    const std::size_t m = w.shape[0], n = w.shape[1];
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
      double acc = b.value[i];
      for (std::size_t j = 0; j < n; ++j) acc += w.value[i * n + j] * in[j];
      out[i] = acc;
    }
    return out;
  };
  std::vector<double> h = dense_ref({0.3, -0.7}, "l0");
  for (double& v : h) v = std::tanh(v);
  std::vector<double> h1 = dense_ref(h, "l1");
  for (double& v : h1) v = std::tanh(v);
  const std::vector<double> expect = dense_ref(h1, "out");

  const ImageTensor got = rcot::generator_eval(gs, p, y);
  for (std::size_t i = 0; i < expect.size(); ++i)
    EXPECT_NEAR(got.data()[i], expect[i], 1e-14);
}

TEST(Nets, EncoderDeterministicAndSized) {
  std::mt19937_64 rng(17);
  const NetSpec es = rcot::make_encoder_spec(NetArch::Conv, 1, 8, 8, 4, 10);
  ParamStore p = rcot::init_params(es, 23);
  randomize(p, rng);
  const ImageTensor r = random_tensor(1, 8, 8, rng, -0.5, 0.5);
  const auto a = rcot::encoder_eval(es, p, r);
  const auto b = rcot::encoder_eval(es, p, r);
  ASSERT_EQ(a.size(), 10u);
  EXPECT_EQ(a, b);
}

TEST(Nets, PotentialFiniteOnUnitRangeInputs) {
  std::mt19937_64 rng(19);
  const NetSpec ps = rcot::make_potential_spec(NetArch::Conv, 1, 8, 8, 4);
  ParamStore p = rcot::init_params(ps, 29);
  for (int trial = 0; trial < 10; ++trial) {
    const double v = rcot::potential_eval(ps, p, random_tensor(1, 8, 8, rng));
    EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Nets, ShapeMismatchThrows) {
  const NetSpec ps = rcot::make_potential_spec(NetArch::Conv, 1, 8, 8, 4);
  ParamStore p = rcot::init_params(ps, 1);
  EXPECT_THROW(rcot::potential_eval(ps, p, ImageTensor(1, 4, 4)),
               rcot::dimension_error);
}

// Finite-difference check for all three network kinds, both architectures.
TEST(Nets, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(31);
  for (auto arch : {NetArch::Conv, NetArch::Mlp}) {
    const int h = arch == NetArch::Conv ? 8 : 1;
    const int w = arch == NetArch::Conv ? 8 : 3;
    const NetSpec gs = rcot::make_generator_spec(arch, 1, h, w, 4);
    const NetSpec es = rcot::make_encoder_spec(arch, 1, h, w, 4, gs.cond_width);
    const NetSpec ps = rcot::make_potential_spec(arch, 1, h, w, 4);
    ParamStore gp = rcot::init_params(gs, 37);
    ParamStore ep = rcot::init_params(es, 38);
    ParamStore pp = rcot::init_params(ps, 39);
    randomize(gp, rng);
    randomize(ep, rng);
    randomize(pp, rng);
    const ImageTensor y = random_tensor(1, h, w, rng, -0.8, 0.8);

    auto build = [&](Tape& t) {
      Var yv = t.leaf(y);
      Var emb = rcot::encoder_forward(t, es, ep, yv);
      Var g = rcot::generator_forward(t, gs, gp, yv, emb);
      Var pot = rcot::potential_forward(t, ps, pp, g);
      return t.add(t.sumsq(g), pot);
    };
    gp.zero_grads();
    ep.zero_grads();
    pp.zero_grads();
    {
      Tape t;
      t.backward(build(t));
    }
    std::vector<ParamStore*> stores{&gp, &ep, &pp};
    auto loss = [&]() {
      Tape t;
      return t.value_scalar(build(t));
    };
    rcot_test::FdMismatch miss;
    const double worst = rcot_test::max_fd_rel_error(stores, loss, 1e-5, 1e-8, &miss);
    EXPECT_LE(worst, 1e-4) << "arch " << static_cast<int>(arch) << ": "
                           << miss.entry << "[" << miss.index << "] analytic "
                           << miss.analytic << " vs fd " << miss.numeric;
  }
}

TEST(Nets, SpecValidation) {
  EXPECT_THROW(rcot::make_generator_spec(NetArch::Conv, 1, 6, 6, 4),
               rcot::usage_error);  // not divisible by 4
  NetSpec bad = rcot::make_generator_spec(NetArch::Conv, 1, 8, 8, 4);
  bad.cond_width = 3;
  EXPECT_THROW(bad.validate(), rcot::usage_error);
}
