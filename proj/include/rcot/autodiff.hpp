#pragma once

// Recorded-tape reverse-mode differentiation over flat double arrays.
// Nodes are whole-tensor operations (conv, dense, activations, reductions),
// values are computed eagerly at recording time, and backward() walks the
// tape once in reverse. Gradients of Param leaves accumulate into their
// ParamStore entries unless the leaf was bound frozen.

#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "rcot/errors.hpp"
#include "rcot/params.hpp"
#include "rcot/spectral.hpp"
#include "rcot/tensor.hpp"

namespace rcot::ad {

enum class Activation { Identity, Tanh, LeakyRelu };

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
  enum class Op {
    Leaf, Param, Add, Sub, Scale, Act, AddChanBias, Reshape,
    Conv2d, Upsample2x, GlobalAvgPool, Dense, SumSq, Sqrt, FreqPenalty
  };

  struct Node {
    Op op;
    int in0 = -1, in1 = -1, in2 = -1;
    std::vector<int> dims;      // {1} scalar, {k} vector, {c,h,w} image, ...
    std::vector<double> val;
    double k = 0.0;             // Scale factor / LeakyRelu slope
    int stride = 1;
    Activation act = Activation::Identity;
    PenaltyKind pkind = PenaltyKind::None;
    ParamStore* store = nullptr;
    int entry = -1;
    bool frozen = false;
  };

 public:
  // ---- leaves ----

  Var leaf(const ImageTensor& t) {
    Node n{Op::Leaf};
    n.dims = {static_cast<int>(t.channels()), static_cast<int>(t.height()),
              static_cast<int>(t.width())};
    n.val.assign(t.data().begin(), t.data().end());
    return push(std::move(n));
  }

  Var leaf_vec(std::span<const double> v) {
    Node n{Op::Leaf};
    n.dims = {static_cast<int>(v.size())};
    n.val.assign(v.begin(), v.end());
    return push(std::move(n));
  }

  // Binds a ParamStore entry. Frozen leaves behave as constants.
  Var param(ParamStore& store, std::string_view name, bool frozen = false) {
    const std::size_t idx = store.index_of(name);
    ParamEntry& e = store.entry(idx);
    Node n{Op::Param};
    n.dims.reserve(e.shape.size());
    for (std::size_t d : e.shape) n.dims.push_back(static_cast<int>(d));
    n.val = e.value;
    n.store = &store;
    n.entry = static_cast<int>(idx);
    n.frozen = frozen;
    return push(std::move(n));
  }

  // ---- elementwise / structural ----

  Var add(Var a, Var b) { return binary(Op::Add, a, b); }
  Var sub(Var a, Var b) { return binary(Op::Sub, a, b); }

  Var scale(Var a, double k) {
    const Node& na = node(a);
    Node n{Op::Scale};
    n.in0 = a.id;
    n.dims = na.dims;
    n.k = k;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = k * na.val[i];
    return push(std::move(n));
  }

  Var activation(Var a, Activation kind, double leaky_slope = 0.2) {
    if (kind == Activation::Identity) return a;
    const Node& na = node(a);
    Node n{Op::Act};
    n.in0 = a.id;
    n.dims = na.dims;
    n.act = kind;
    n.k = leaky_slope;
    n.val.resize(na.val.size());
    if (kind == Activation::Tanh)
      for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::tanh(na.val[i]);
    else
      for (std::size_t i = 0; i < n.val.size(); ++i)
        n.val[i] = na.val[i] > 0.0 ? na.val[i] : leaky_slope * na.val[i];
    return push(std::move(n));
  }

  // Same data under new dims; value copy, gradient passes straight through.
  Var reshape(Var a, std::vector<int> dims) {
    const Node& na = node(a);
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    if (n != na.val.size())
      throw dimension_error("reshape: element count mismatch");
    Node nn{Op::Reshape};
    nn.in0 = a.id;
    nn.dims = std::move(dims);
    nn.val = na.val;
    return push(std::move(nn));
  }

  // x:(c,h,w) plus a length-c vector broadcast over each channel plane.
  Var add_channel_bias(Var x, Var v) {
    const Node& nx = node(x);
    const Node& nv = node(v);
    if (nx.dims.size() != 3 || numel(nv) != static_cast<std::size_t>(nx.dims[0]))
      throw dimension_error("add_channel_bias: need (c,h,w) input and length-c vector");
    Node n{Op::AddChanBias};
    n.in0 = x.id;
    n.in1 = v.id;
    n.dims = nx.dims;
    n.val = nx.val;
    const std::size_t plane = static_cast<std::size_t>(nx.dims[1]) * nx.dims[2];
    for (int c = 0; c < nx.dims[0]; ++c)
      for (std::size_t i = 0; i < plane; ++i) n.val[c * plane + i] += nv.val[c];
    return push(std::move(n));
  }

  // ---- layers ----

  // 2-D convolution, odd square kernel, zero padding k/2, given stride.
  // x:(ic,h,w)  w:(oc,ic,kh,kw)  b:(oc) or invalid for bias-free.
  Var conv2d(Var x, Var w, Var b, int stride) {
    const Node& nx = node(x);
    const Node& nw = node(w);
    if (nx.dims.size() != 3 || nw.dims.size() != 4)
      throw dimension_error("conv2d: need (c,h,w) input and (oc,ic,kh,kw) weights");
    const int ic = nx.dims[0], h = nx.dims[1], wd = nx.dims[2];
    const int oc = nw.dims[0], kh = nw.dims[2], kw = nw.dims[3];
    if (nw.dims[1] != ic)
      throw dimension_error("conv2d: input channel mismatch");
    if (b.valid() && numel(node(b)) != static_cast<std::size_t>(oc))
      throw dimension_error("conv2d: bias length mismatch");
    const int p = kh / 2;
    const int oh = (h + 2 * p - kh) / stride + 1;
    const int ow = (wd + 2 * p - kw) / stride + 1;

    Node n{Op::Conv2d};
    n.in0 = x.id;
    n.in1 = w.id;
    n.in2 = b.valid() ? b.id : -1;
    n.dims = {oc, oh, ow};
    n.stride = stride;
    n.val.assign(static_cast<std::size_t>(oc) * oh * ow, 0.0);
    if (b.valid()) {
      const Node& nb = node(b);
      for (int co = 0; co < oc; ++co)
        std::fill(n.val.begin() + static_cast<std::size_t>(co) * oh * ow,
                  n.val.begin() + static_cast<std::size_t>(co + 1) * oh * ow,
                  nb.val[co]);
    }
    for (int co = 0; co < oc; ++co)
      for (int ci = 0; ci < ic; ++ci)
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx) {
            const double wv =
                nw.val[((static_cast<std::size_t>(co) * ic + ci) * kh + ky) * kw + kx];
            if (wv == 0.0) continue;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride + ky - p;
              if (iy < 0 || iy >= h) continue;
              const double* xr = nx.val.data() + (static_cast<std::size_t>(ci) * h + iy) * wd;
              double* orow = n.val.data() + (static_cast<std::size_t>(co) * oh + oy) * ow;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride + kx - p;
                if (ix < 0 || ix >= wd) continue;
                orow[ox] += wv * xr[ix];
              }
            }
          }
    return push(std::move(n));
  }

  Var upsample2x(Var x) {
    const Node& nx = node(x);
    if (nx.dims.size() != 3)
      throw dimension_error("upsample2x: need (c,h,w) input");
    const int c = nx.dims[0], h = nx.dims[1], wd = nx.dims[2];
    Node n{Op::Upsample2x};
    n.in0 = x.id;
    n.dims = {c, 2 * h, 2 * wd};
    n.val.resize(static_cast<std::size_t>(c) * 4 * h * wd);
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < 2 * h; ++y)
        for (int x2 = 0; x2 < 2 * wd; ++x2)
          n.val[(static_cast<std::size_t>(ci) * 2 * h + y) * 2 * wd + x2] =
              nx.val[(static_cast<std::size_t>(ci) * h + y / 2) * wd + x2 / 2];
    return push(std::move(n));
  }

  Var global_avg_pool(Var x) {
    const Node& nx = node(x);
    if (nx.dims.size() != 3)
      throw dimension_error("global_avg_pool: need (c,h,w) input");
    const int c = nx.dims[0];
    const std::size_t plane = static_cast<std::size_t>(nx.dims[1]) * nx.dims[2];
    Node n{Op::GlobalAvgPool};
    n.in0 = x.id;
    n.dims = {c};
    n.val.assign(c, 0.0);
    for (int ci = 0; ci < c; ++ci) {
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) s += nx.val[ci * plane + i];
      n.val[ci] = s / static_cast<double>(plane);
    }
    return push(std::move(n));
  }

  // Fully connected layer on the flattened input. w:(m,n); b:(m) or invalid.
  Var dense(Var x, Var w, Var b) {
    const Node& nx = node(x);
    const Node& nw = node(w);
    if (nw.dims.size() != 2)
      throw dimension_error("dense: weights must be (m,n)");
    const int m = nw.dims[0], nn = nw.dims[1];
    if (numel(nx) != static_cast<std::size_t>(nn))
      throw dimension_error("dense: input length mismatch");
    if (b.valid() && numel(node(b)) != static_cast<std::size_t>(m))
      throw dimension_error("dense: bias length mismatch");
    Node n{Op::Dense};
    n.in0 = x.id;
    n.in1 = w.id;
    n.in2 = b.valid() ? b.id : -1;
    n.dims = {m};
    n.val.assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
      double acc = b.valid() ? node(b).val[i] : 0.0;
      const double* wr = nw.val.data() + static_cast<std::size_t>(i) * nn;
      for (int j = 0; j < nn; ++j) acc += wr[j] * nx.val[j];
      n.val[i] = acc;
    }
    return push(std::move(n));
  }

  // ---- reductions ----

  Var sumsq(Var a) {
    const Node& na = node(a);
    Node n{Op::SumSq};
    n.in0 = a.id;
    n.dims = {1};
    double s = 0.0;
    for (double v : na.val) s += v * v;
    n.val = {s};
    return push(std::move(n));
  }

  Var sqrt_of(Var a) {
    const Node& na = node(a);
    if (numel(na) != 1) throw dimension_error("sqrt_of: scalar input required");
    Node n{Op::Sqrt};
    n.in0 = a.id;
    n.dims = {1};
    n.val = {std::sqrt(na.val[0])};
    return push(std::move(n));
  }

  // g(r) on the Fourier amplitudes of r:(c,h,w), with its analytic adjoint.
  Var freq_penalty_node(Var r, PenaltyKind kind) {
    const Node& nr = node(r);
    if (nr.dims.size() != 3)
      throw dimension_error("freq_penalty_node: need (c,h,w) input");
    Node n{Op::FreqPenalty};
    n.in0 = r.id;
    n.dims = {1};
    n.pkind = kind;
    n.val = {freq_penalty(as_tensor(nr), kind)};
    return push(std::move(n));
  }

  // Mean of scalar vars.
  Var mean_of(std::span<const Var> xs) {
    if (xs.empty()) throw usage_error("mean_of: empty list");
    Var acc = xs[0];
    for (std::size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
    return scale(acc, 1.0 / static_cast<double>(xs.size()));
  }

  // ---- access ----

  double value_scalar(Var v) const {
    const Node& n = node(v);
    if (numel(n) != 1) throw dimension_error("value_scalar: not a scalar node");
    return n.val[0];
  }

  const std::vector<double>& value(Var v) const { return node(v).val; }

  ImageTensor value_tensor(Var v) const {
    const Node& n = node(v);
    if (n.dims.size() != 3)
      throw dimension_error("value_tensor: node is not (c,h,w)-shaped");
    return as_tensor(n);
  }

  std::size_t size() const { return nodes_.size(); }

  // ---- reverse pass ----

  // Accumulates d(root)/d(param) into every non-frozen Param leaf's store.
  void backward(Var root) {
    if (!root.valid() || static_cast<std::size_t>(root.id) >= nodes_.size())
      throw state_error("backward: no recorded forward value for this var");
    if (numel(node(root)) != 1)
      throw usage_error("backward: root must be scalar");
    std::vector<std::vector<double>> grads(nodes_.size());
    grads[root.id] = {1.0};
    for (int id = root.id; id >= 0; --id) {
      if (grads[id].empty()) continue;
      step_back(id, grads);
    }
  }

 private:
  std::vector<Node> nodes_;

  Var push(Node&& n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Node& node(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
      throw state_error("Tape: invalid var handle");
    return nodes_[v.id];
  }

  static std::size_t numel(const Node& n) { return n.val.size(); }

  static ImageTensor as_tensor(const Node& n) {
    return ImageTensor(n.dims[0], n.dims[1], n.dims[2], std::vector<double>(n.val));
  }

  Var binary(Op op, Var a, Var b) {
    const Node& na = node(a);
    const Node& nb = node(b);
    if (na.val.size() != nb.val.size())
      throw dimension_error("add/sub: operand sizes differ");
    Node n{op};
    n.in0 = a.id;
    n.in1 = b.id;
    n.dims = na.dims;
    n.val.resize(na.val.size());
    if (op == Op::Add)
      for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] + nb.val[i];
    else
      for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] - nb.val[i];
    return push(std::move(n));
  }

  std::vector<double>& ensure(std::vector<std::vector<double>>& grads, int id) {
    if (grads[id].empty()) grads[id].assign(nodes_[id].val.size(), 0.0);
    return grads[id];
  }

  void step_back(int id, std::vector<std::vector<double>>& grads) {
    Node& n = nodes_[id];
    const std::vector<double>& go = grads[id];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Param:
        if (!n.frozen) {
          auto& g = n.store->entry(n.entry).grad;
          for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i];
        }
        break;
      case Op::Add: {
        auto& ga = ensure(grads, n.in0);
        auto& gb = ensure(grads, n.in1);
        for (std::size_t i = 0; i < go.size(); ++i) { ga[i] += go[i]; gb[i] += go[i]; }
        break;
      }
      case Op::Sub: {
        auto& ga = ensure(grads, n.in0);
        auto& gb = ensure(grads, n.in1);
        for (std::size_t i = 0; i < go.size(); ++i) { ga[i] += go[i]; gb[i] -= go[i]; }
        break;
      }
      case Op::Scale: {
        auto& ga = ensure(grads, n.in0);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += n.k * go[i];
        break;
      }
      case Op::Reshape: {
        auto& ga = ensure(grads, n.in0);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
        break;
      }
      case Op::Act: {
        auto& ga = ensure(grads, n.in0);
        if (n.act == Activation::Tanh) {
          for (std::size_t i = 0; i < go.size(); ++i)
            ga[i] += (1.0 - n.val[i] * n.val[i]) * go[i];
        } else {
          const std::vector<double>& xin = nodes_[n.in0].val;
          for (std::size_t i = 0; i < go.size(); ++i)
            ga[i] += (xin[i] > 0.0 ? 1.0 : n.k) * go[i];
        }
        break;
      }
      case Op::AddChanBias: {
        auto& gx = ensure(grads, n.in0);
        auto& gv = ensure(grads, n.in1);
        const std::size_t plane = static_cast<std::size_t>(n.dims[1]) * n.dims[2];
        for (int c = 0; c < n.dims[0]; ++c) {
          double s = 0.0;
          for (std::size_t i = 0; i < plane; ++i) {
            gx[c * plane + i] += go[c * plane + i];
            s += go[c * plane + i];
          }
          gv[c] += s;
        }
        break;
      }
      case Op::Conv2d: {
        const Node& nx = nodes_[n.in0];
        const Node& nw = nodes_[n.in1];
        auto& gx = ensure(grads, n.in0);
        auto& gw = ensure(grads, n.in1);
        const int ic = nx.dims[0], h = nx.dims[1], wd = nx.dims[2];
        const int oc = nw.dims[0], kh = nw.dims[2], kw = nw.dims[3];
        const int oh = n.dims[1], ow = n.dims[2];
        const int p = kh / 2, s = n.stride;
        if (n.in2 >= 0) {
          auto& gb = ensure(grads, n.in2);
          for (int co = 0; co < oc; ++co) {
            double acc = 0.0;
            const double* gr = go.data() + static_cast<std::size_t>(co) * oh * ow;
            for (int i = 0; i < oh * ow; ++i) acc += gr[i];
            gb[co] += acc;
          }
        }
        for (int co = 0; co < oc; ++co)
          for (int ci = 0; ci < ic; ++ci)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const std::size_t widx =
                    ((static_cast<std::size_t>(co) * ic + ci) * kh + ky) * kw + kx;
                const double wv = nw.val[widx];
                double gw_acc = 0.0;
                for (int oy = 0; oy < oh; ++oy) {
                  const int iy = oy * s + ky - p;
                  if (iy < 0 || iy >= h) continue;
                  const double* gr = go.data() + (static_cast<std::size_t>(co) * oh + oy) * ow;
                  const double* xr = nx.val.data() + (static_cast<std::size_t>(ci) * h + iy) * wd;
                  double* gxr = gx.data() + (static_cast<std::size_t>(ci) * h + iy) * wd;
                  for (int ox = 0; ox < ow; ++ox) {
                    const int ix = ox * s + kx - p;
                    if (ix < 0 || ix >= wd) continue;
                    gw_acc += gr[ox] * xr[ix];
                    gxr[ix] += gr[ox] * wv;
                  }
                }
                gw[widx] += gw_acc;
              }
        break;
      }
      case Op::Upsample2x: {
        auto& gx = ensure(grads, n.in0);
        const int c = n.dims[0], oh = n.dims[1], ow = n.dims[2];
        const int h = oh / 2, wd = ow / 2;
        for (int ci = 0; ci < c; ++ci)
          for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
              gx[(static_cast<std::size_t>(ci) * h + y / 2) * wd + x / 2] +=
                  go[(static_cast<std::size_t>(ci) * oh + y) * ow + x];
        break;
      }
      case Op::GlobalAvgPool: {
        auto& gx = ensure(grads, n.in0);
        const Node& nx = nodes_[n.in0];
        const std::size_t plane = static_cast<std::size_t>(nx.dims[1]) * nx.dims[2];
        for (int c = 0; c < n.dims[0]; ++c) {
          const double g = go[c] / static_cast<double>(plane);
          for (std::size_t i = 0; i < plane; ++i) gx[c * plane + i] += g;
        }
        break;
      }
      case Op::Dense: {
        const Node& nx = nodes_[n.in0];
        const Node& nw = nodes_[n.in1];
        auto& gx = ensure(grads, n.in0);
        auto& gw = ensure(grads, n.in1);
        const int m = nw.dims[0], nn = nw.dims[1];
        if (n.in2 >= 0) {
          auto& gb = ensure(grads, n.in2);
          for (int i = 0; i < m; ++i) gb[i] += go[i];
        }
        for (int i = 0; i < m; ++i) {
          const double g = go[i];
          const double* wr = nw.val.data() + static_cast<std::size_t>(i) * nn;
          double* gwr = gw.data() + static_cast<std::size_t>(i) * nn;
          for (int j = 0; j < nn; ++j) {
            gwr[j] += g * nx.val[j];
            gx[j] += g * wr[j];
          }
        }
        break;
      }
      case Op::SumSq: {
        auto& ga = ensure(grads, n.in0);
        const std::vector<double>& xin = nodes_[n.in0].val;
        const double g = 2.0 * go[0];
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * xin[i];
        break;
      }
      case Op::Sqrt: {
        auto& ga = ensure(grads, n.in0);
        if (n.val[0] > 0.0) ga[0] += go[0] * 0.5 / n.val[0];
        // subgradient 0 at exactly zero
        break;
      }
      case Op::FreqPenalty: {
        auto& ga = ensure(grads, n.in0);
        const ImageTensor g = freq_penalty_grad(as_tensor(nodes_[n.in0]), n.pkind);
        auto gd = g.data();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[0] * gd[i];
        break;
      }
    }
  }
};

}  // namespace rcot::ad
