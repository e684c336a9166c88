#pragma once

// The two-pass residual-conditioned transport map T. Pass one produces an
// unconditional restoration and its residual r0 = y - G(y); the residual is
// encoded to an embedding, linearly projected (bias-free, so a zero embedding
// is exactly neutral), and added per channel at the generator's fusion layer
// for the conditioned second pass. One generator, called twice.

#include <cstdint>
#include <utility>
#include <vector>

#include "rcot/autodiff.hpp"
#include "rcot/nets.hpp"
#include "rcot/params.hpp"
#include "rcot/tensor.hpp"

namespace rcot {

class RcotMap {
 public:
  // use_trc = false degenerates to the single-pass unconditional generator.
  // detach_residual = true stops gradients from flowing through the first
  // pass into r0 (ablation switch; default keeps the map differentiable
  // end to end).
  RcotMap(NetSpec gen_spec, NetSpec enc_spec, std::uint64_t seed,
          bool use_trc = true, bool detach_residual = false)
      : gen_spec_(gen_spec), enc_spec_(enc_spec), use_trc_(use_trc),
        detach_residual_(detach_residual) {
    gen_spec_.validate();
    enc_spec_.validate();
    if (enc_spec_.channels != gen_spec_.channels ||
        enc_spec_.height != gen_spec_.height ||
        enc_spec_.width != gen_spec_.width)
      throw dimension_error("RcotMap: generator and encoder data shapes differ");
    if (enc_spec_.cond_width != gen_spec_.cond_width)
      throw dimension_error("RcotMap: encoder output length " +
                            std::to_string(enc_spec_.cond_width) +
                            " != generator conditioning width " +
                            std::to_string(gen_spec_.cond_width));
    theta1_ = init_params(gen_spec_, seed);
    theta2_ = init_params(enc_spec_, seed + 1);
    std::mt19937_64 rng(seed + 2);
    const auto k = static_cast<std::size_t>(gen_spec_.cond_width);
    auto& w = fusion_.add("proj.w", {k, k});
    detail::glorot_fill(w.value, k, k, rng);
  }

  const NetSpec& gen_spec() const { return gen_spec_; }
  const NetSpec& enc_spec() const { return enc_spec_; }
  bool use_trc() const { return use_trc_; }
  bool detach_residual() const { return detach_residual_; }

  ParamStore& theta1() { return theta1_; }
  ParamStore& theta2() { return theta2_; }
  ParamStore& fusion() { return fusion_; }
  const ParamStore& theta1() const { return theta1_; }
  const ParamStore& theta2() const { return theta2_; }
  const ParamStore& fusion() const { return fusion_; }

  std::vector<ParamStore*> param_stores() {
    if (!use_trc_) return {&theta1_};
    return {&theta1_, &theta2_, &fusion_};
  }

  // Full two-pass forward on the tape. Differentiable end to end unless
  // detach_residual is set.
  ad::Var apply_var(ad::Tape& t, ad::Var y, bool frozen = false) {
    if (!use_trc_)
      return generator_forward(t, gen_spec_, theta1_, y, {}, frozen);
    ad::Var inter = generator_forward(t, gen_spec_, theta1_, y, {}, frozen);
    ad::Var r0 = t.sub(y, inter);
    if (detach_residual_) r0 = t.leaf(t.value_tensor(r0));
    ad::Var emb = encoder_forward(t, enc_spec_, theta2_, r0, frozen);
    ad::Var cond = t.dense(emb, t.param(fusion_, "proj.w", frozen), {});
    return generator_forward(t, gen_spec_, theta1_, y, cond, frozen);
  }

  // Pass one only: (intermediate G(y), residual y - G(y)).
  std::pair<ImageTensor, ImageTensor> first_pass(const ImageTensor& y) {
    check_shape(y);
    ImageTensor inter = generator_eval(gen_spec_, theta1_, y);
    return {inter, sub(y, inter)};
  }

  ImageTensor apply(const ImageTensor& y) {
    check_shape(y);
    ad::Tape t;
    return t.value_tensor(apply_var(t, t.leaf(y), /*frozen=*/true));
  }

  // r(T) = y - T(y), the quantity the frequency penalty acts on.
  ImageTensor transport_residual(const ImageTensor& y) {
    return sub(y, apply(y));
  }

 private:
  void check_shape(const ImageTensor& y) const {
    if (static_cast<int>(y.channels()) != gen_spec_.channels ||
        static_cast<int>(y.height()) != gen_spec_.height ||
        static_cast<int>(y.width()) != gen_spec_.width)
      throw dimension_error("RcotMap: input shape " + y.shape_str() +
                            " does not match the map's data shape");
  }

  NetSpec gen_spec_, enc_spec_;
  ParamStore theta1_, theta2_, fusion_;
  bool use_trc_, detach_residual_;
};

}  // namespace rcot
