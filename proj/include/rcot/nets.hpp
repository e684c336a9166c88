#pragma once

// Small parametric networks: image generator, residual encoder, and scalar
// potential. Conv variants for image data, MLP variants for low-dimensional
// point experiments. Architectures are deliberately tiny; every forward is
// tape-recorded so gradients come from the same code path as values.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>

#include "rcot/autodiff.hpp"
#include "rcot/errors.hpp"
#include "rcot/params.hpp"
#include "rcot/tensor.hpp"

namespace rcot {

enum class NetKind { Generator, Encoder, Potential };
enum class NetArch { Conv, Mlp };

struct NetSpec {
  NetKind kind = NetKind::Generator;
  NetArch arch = NetArch::Conv;
  int channels = 1, height = 32, width = 32;  // data shape
  int base_width = 8;       // conv: first-stage channels F; mlp: hidden width
  int cond_width = 16;      // generator: conditioning length; encoder: output length
  ad::Activation act = ad::Activation::Tanh;
  double leaky_slope = 0.2;

  // Width of the layer where the condition is fused additively. The conv
  // generator fuses at the bottleneck (2F channels), the MLP at its first
  // hidden layer.
  int fusion_width() const {
    return arch == NetArch::Conv ? 2 * base_width : base_width;
  }

  int flat_size() const { return channels * height * width; }

  void validate() const {
    if (channels < 1 || height < 1 || width < 1)
      throw dimension_error("NetSpec: bad data shape");
    if (base_width < 1) throw usage_error("NetSpec: base_width must be >= 1");
    if (arch == NetArch::Conv && (height % 4 != 0 || width % 4 != 0))
      throw usage_error("NetSpec: conv nets need height and width divisible by 4");
    if (kind == NetKind::Generator && cond_width != fusion_width())
      throw usage_error(
          "NetSpec: generator conditioning width must equal its fusion width (" +
          std::to_string(fusion_width()) + ")");
    if (kind == NetKind::Encoder && cond_width < 1)
      throw usage_error("NetSpec: encoder output length must be >= 1");
  }
};

inline NetSpec make_generator_spec(NetArch arch, int channels, int height,
                                   int width, int base_width,
                                   ad::Activation act = ad::Activation::Tanh) {
  NetSpec s{NetKind::Generator, arch, channels, height, width, base_width, 0, act};
  s.cond_width = s.fusion_width();
  s.validate();
  return s;
}

inline NetSpec make_encoder_spec(NetArch arch, int channels, int height, int width,
                                 int base_width, int embed_len,
                                 ad::Activation act = ad::Activation::Tanh) {
  NetSpec s{NetKind::Encoder, arch, channels, height, width, base_width, embed_len, act};
  s.validate();
  return s;
}

inline NetSpec make_potential_spec(NetArch arch, int channels, int height,
                                   int width, int base_width,
                                   ad::Activation act = ad::Activation::Tanh) {
  NetSpec s{NetKind::Potential, arch, channels, height, width, base_width, 0, act};
  s.validate();
  return s;
}

namespace detail {

// Weights: uniform on [-limit, limit] with limit = sqrt(6 / (fan_in + fan_out)).
inline void glorot_fill(std::vector<double>& w, std::size_t fan_in,
                        std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : w) v = dist(rng);
}

inline void add_conv(ParamStore& p, const std::string& name, std::size_t oc,
                     std::size_t ic, std::mt19937_64& rng, bool bias = true) {
  auto& w = p.add(name + ".w", {oc, ic, 3, 3});
  glorot_fill(w.value, ic * 9, oc * 9, rng);
  if (bias) p.add(name + ".b", {oc});  // zero-initialized
}

inline void add_dense(ParamStore& p, const std::string& name, std::size_t out,
                      std::size_t in, std::mt19937_64& rng, bool bias = true) {
  auto& w = p.add(name + ".w", {out, in});
  glorot_fill(w.value, in, out, rng);
  if (bias) p.add(name + ".b", {out});
}

inline ad::Var conv_act(ad::Tape& t, const NetSpec& spec, ParamStore& p,
                        const std::string& name, ad::Var x, int stride,
                        bool frozen) {
  ad::Var y = t.conv2d(x, t.param(p, name + ".w", frozen),
                       t.param(p, name + ".b", frozen), stride);
  return t.activation(y, spec.act, spec.leaky_slope);
}

}  // namespace detail

// Deterministic initialization for the given seed: variance-scaled uniform
// weights, zero biases. Entry order (and thus RNG consumption) is fixed.
inline ParamStore init_params(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ParamStore p;
  const std::size_t f = static_cast<std::size_t>(spec.base_width);
  const std::size_t cin = static_cast<std::size_t>(spec.channels);
  const std::size_t flat = static_cast<std::size_t>(spec.flat_size());
  const std::size_t k = static_cast<std::size_t>(spec.cond_width);
  if (spec.arch == NetArch::Conv) {
    switch (spec.kind) {
      case NetKind::Generator:
        detail::add_conv(p, "enc1", f, cin, rng);
        detail::add_conv(p, "enc2", 2 * f, f, rng);
        detail::add_conv(p, "enc3", 2 * f, 2 * f, rng);
        detail::add_conv(p, "mid", 2 * f, 2 * f, rng);
        detail::add_conv(p, "dec1", 2 * f, 2 * f, rng);
        detail::add_conv(p, "dec2", f, 2 * f, rng);
        detail::add_conv(p, "out", cin, f, rng);
        break;
      case NetKind::Encoder:
        detail::add_conv(p, "enc1", f, cin, rng);
        detail::add_conv(p, "enc2", 2 * f, f, rng);
        detail::add_dense(p, "out", k, 2 * f, rng);
        break;
      case NetKind::Potential:
        detail::add_conv(p, "c1", f, cin, rng);
        detail::add_conv(p, "c2", 2 * f, f, rng);
        detail::add_conv(p, "c3", 2 * f, 2 * f, rng);
        detail::add_dense(p, "out", 1, 2 * f, rng);
        break;
    }
  } else {
    switch (spec.kind) {
      case NetKind::Generator:
        detail::add_dense(p, "l0", f, flat, rng);
        detail::add_dense(p, "l1", f, f, rng);
        detail::add_dense(p, "out", flat, f, rng);
        break;
      case NetKind::Encoder:
        detail::add_dense(p, "l0", f, flat, rng);
        detail::add_dense(p, "out", k, f, rng);
        break;
      case NetKind::Potential:
        detail::add_dense(p, "l0", f, flat, rng);
        detail::add_dense(p, "l1", f, f, rng);
        detail::add_dense(p, "out", 1, f, rng);
        break;
    }
  }
  return p;
}

// Generator pass. `cond`, when valid, is a length-cond_width vector added
// per channel (conv) or per unit (mlp) at the fusion layer; an all-zero
// condition reproduces the unconditional pass exactly.
inline ad::Var generator_forward(ad::Tape& t, const NetSpec& spec, ParamStore& p,
                                 ad::Var y, ad::Var cond = {}, bool frozen = false) {
  if (spec.kind != NetKind::Generator)
    throw contract_error("generator_forward: spec is not a generator");
  if (static_cast<int>(t.value(y).size()) != spec.flat_size())
    throw dimension_error("generator_forward: input does not match data shape");
  if (cond.valid() &&
      static_cast<int>(t.value(cond).size()) != spec.cond_width)
    throw dimension_error("generator_forward: condition length " +
                          std::to_string(t.value(cond).size()) + " != " +
                          std::to_string(spec.cond_width));
  if (spec.arch == NetArch::Conv) {
    ad::Var e1 = detail::conv_act(t, spec, p, "enc1", y, 1, frozen);
    ad::Var e2 = detail::conv_act(t, spec, p, "enc2", e1, 2, frozen);
    ad::Var e3 = detail::conv_act(t, spec, p, "enc3", e2, 2, frozen);
    if (cond.valid()) e3 = t.add_channel_bias(e3, cond);
    ad::Var m = detail::conv_act(t, spec, p, "mid", e3, 1, frozen);
    ad::Var d1 = t.conv2d(t.upsample2x(m), t.param(p, "dec1.w", frozen),
                          t.param(p, "dec1.b", frozen), 1);
    d1 = t.activation(t.add(d1, e2), spec.act, spec.leaky_slope);
    ad::Var d2 = t.conv2d(t.upsample2x(d1), t.param(p, "dec2.w", frozen),
                          t.param(p, "dec2.b", frozen), 1);
    d2 = t.activation(t.add(d2, e1), spec.act, spec.leaky_slope);
    return t.conv2d(d2, t.param(p, "out.w", frozen), t.param(p, "out.b", frozen), 1);
  }
  ad::Var h0 = t.dense(y, t.param(p, "l0.w", frozen), t.param(p, "l0.b", frozen));
  if (cond.valid()) h0 = t.add(h0, cond);
  h0 = t.activation(h0, spec.act, spec.leaky_slope);
  ad::Var h1 = t.activation(
      t.dense(h0, t.param(p, "l1.w", frozen), t.param(p, "l1.b", frozen)),
      spec.act, spec.leaky_slope);
  ad::Var o = t.dense(h1, t.param(p, "out.w", frozen), t.param(p, "out.b", frozen));
  return t.reshape(o, {spec.channels, spec.height, spec.width});
}

// Residual encoder: degradation-specific embedding of fixed length.
inline ad::Var encoder_forward(ad::Tape& t, const NetSpec& spec, ParamStore& p,
                               ad::Var r, bool frozen = false) {
  if (spec.kind != NetKind::Encoder)
    throw contract_error("encoder_forward: spec is not an encoder");
  if (static_cast<int>(t.value(r).size()) != spec.flat_size())
    throw dimension_error("encoder_forward: input does not match data shape");
  if (spec.arch == NetArch::Conv) {
    ad::Var c1 = detail::conv_act(t, spec, p, "enc1", r, 2, frozen);
    ad::Var c2 = detail::conv_act(t, spec, p, "enc2", c1, 2, frozen);
    ad::Var pool = t.global_avg_pool(c2);
    return t.dense(pool, t.param(p, "out.w", frozen), t.param(p, "out.b", frozen));
  }
  ad::Var h = t.activation(
      t.dense(r, t.param(p, "l0.w", frozen), t.param(p, "l0.b", frozen)),
      spec.act, spec.leaky_slope);
  return t.dense(h, t.param(p, "out.w", frozen), t.param(p, "out.b", frozen));
}

// Scalar potential (the dual variable / critic).
inline ad::Var potential_forward(ad::Tape& t, const NetSpec& spec, ParamStore& p,
                                 ad::Var x, bool frozen = false) {
  if (spec.kind != NetKind::Potential)
    throw contract_error("potential_forward: spec is not a potential");
  if (static_cast<int>(t.value(x).size()) != spec.flat_size())
    throw dimension_error("potential_forward: input does not match data shape");
  if (spec.arch == NetArch::Conv) {
    ad::Var c1 = detail::conv_act(t, spec, p, "c1", x, 2, frozen);
    ad::Var c2 = detail::conv_act(t, spec, p, "c2", c1, 2, frozen);
    ad::Var c3 = detail::conv_act(t, spec, p, "c3", c2, 1, frozen);
    ad::Var pool = t.global_avg_pool(c3);
    return t.dense(pool, t.param(p, "out.w", frozen), t.param(p, "out.b", frozen));
  }
  ad::Var h0 = t.activation(
      t.dense(x, t.param(p, "l0.w", frozen), t.param(p, "l0.b", frozen)),
      spec.act, spec.leaky_slope);
  ad::Var h1 = t.activation(
      t.dense(h0, t.param(p, "l1.w", frozen), t.param(p, "l1.b", frozen)),
      spec.act, spec.leaky_slope);
  return t.dense(h1, t.param(p, "out.w", frozen), t.param(p, "out.b", frozen));
}

// Tensor-level conveniences (no gradients recorded into the stores).

inline ImageTensor generator_eval(const NetSpec& spec, ParamStore& p,
                                  const ImageTensor& y,
                                  std::span<const double> cond = {}) {
  ad::Tape t;
  ad::Var yv = t.leaf(y);
  ad::Var cv = cond.empty() ? ad::Var{} : t.leaf_vec(cond);
  return t.value_tensor(generator_forward(t, spec, p, yv, cv, /*frozen=*/true));
}

inline std::vector<double> encoder_eval(const NetSpec& spec, ParamStore& p,
                                        const ImageTensor& r) {
  ad::Tape t;
  return t.value(encoder_forward(t, spec, p, t.leaf(r), /*frozen=*/true));
}

inline double potential_eval(const NetSpec& spec, ParamStore& p,
                             const ImageTensor& x) {
  ad::Tape t;
  return t.value_scalar(potential_forward(t, spec, p, t.leaf(x), /*frozen=*/true));
}

}  // namespace rcot
