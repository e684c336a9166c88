#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rcot/errors.hpp"
#include "rcot/spectral.hpp"
#include "rcot/tensor.hpp"

namespace rcot {

enum class BaseCost { L2, SquaredL2 };

// The transport cost family: a base sample distance c plus a weighted
// frequency penalty on the residual, c~(y, x) = c(x, y) + weight * g(y - x).
// weight = 1 reproduces the plain additive form.
struct CostSpec {
  BaseCost base = BaseCost::L2;
  PenaltyKind penalty = PenaltyKind::None;
  double weight = 1.0;

  void validate() const {
    if (!(weight >= 0.0))
      throw usage_error("CostSpec: penalty weight must be >= 0");
  }
};

// Minimal dense row-major matrix for cost tables and small linear algebra.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), v(r * c, fill) {}

  double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
  bool square() const { return rows == cols; }
};

inline double base_cost(const ImageTensor& x, const ImageTensor& y, BaseCost kind) {
  detail::require_same_shape(x, y, "base_cost");
  double s = 0.0;
  auto dx = x.data(), dy = y.data();
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double d = dx[i] - dy[i];
    s += d * d;
  }
  return kind == BaseCost::L2 ? std::sqrt(s) : s;
}

// c~(y, x) = c(x, y) + weight * g(y - x) with r = y - x.
inline double frot_cost(const ImageTensor& x, const ImageTensor& y,
                        const CostSpec& spec) {
  spec.validate();
  detail::require_same_shape(x, y, "frot_cost");
  double total = base_cost(x, y, spec.base);
  if (spec.penalty != PenaltyKind::None && spec.weight > 0.0)
    total += spec.weight * freq_penalty(sub(y, x), spec.penalty);
  return total;
}

// Entry (i, j) = c~(ys[i], xs[j]). Rows index the source (degraded) side.
inline Matrix cost_matrix(const std::vector<ImageTensor>& ys,
                          const std::vector<ImageTensor>& xs,
                          const CostSpec& spec) {
  if (ys.empty() || xs.empty())
    throw usage_error("cost_matrix: empty support");
  Matrix m(ys.size(), xs.size());
  for (std::size_t i = 0; i < ys.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j)
      m.at(i, j) = frot_cost(xs[j], ys[i], spec);
  return m;
}

}  // namespace rcot
