#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "rcot/cost.hpp"
#include "rcot/errors.hpp"

namespace rcot {

// Exact solution of a discrete OT instance on equal-mass uniform supports.
// `assignment[i]` is the target index paired with source i, `total_cost`
// the sum of assigned entries. `phi` are dual potentials on targets
// (columns) and `phi_c` their c-transform on sources (rows); together they
// certify optimality through a vanishing dual gap. Solutions produced by
// enumerate_assignment carry no potentials.
struct DiscreteOTSolution {
  std::vector<std::size_t> assignment;
  double total_cost = 0.0;
  std::vector<double> phi;    // per target
  std::vector<double> phi_c;  // per source
};

namespace detail {
inline double assignment_total(const Matrix& cost,
                               const std::vector<std::size_t>& perm) {
  double s = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) s += cost.at(i, perm[i]);
  return s;
}
}  // namespace detail

// Minimum-cost perfect assignment by the Hungarian algorithm with dual
// potentials (shortest augmenting paths over reduced costs, O(n^3)).
// The final potentials satisfy u_i + v_j <= cost(i, j) with equality on
// assigned pairs, which is exactly dual optimality for the uniform-weight
// Kantorovich problem on the instance.
inline DiscreteOTSolution solve_assignment(const Matrix& cost) {
  if (!cost.square())
    throw dimension_error("solve_assignment: cost matrix must be square, got " +
                          std::to_string(cost.rows) + "x" + std::to_string(cost.cols));
  const std::size_t n = cost.rows;
  if (n == 0) throw usage_error("solve_assignment: empty instance");
  if (n > 64) throw usage_error("solve_assignment: supports larger than 64 are out of scope");

  const double inf = std::numeric_limits<double>::infinity();
  // 1-based working arrays; row 0 / column 0 are sentinels.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0);  // column -> assigned row
  std::vector<std::size_t> way(n + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
        if (minv[j] < delta) { delta = minv[j]; j1 = j; }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) { u[match[j]] += delta; v[j] -= delta; }
        else minv[j] -= delta;
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  DiscreteOTSolution sol;
  sol.assignment.assign(n, 0);
  sol.phi.assign(n, 0.0);
  sol.phi_c.assign(n, 0.0);
  for (std::size_t j = 1; j <= n; ++j) sol.assignment[match[j] - 1] = j - 1;
  for (std::size_t j = 1; j <= n; ++j) sol.phi[j - 1] = v[j];
  for (std::size_t i = 1; i <= n; ++i) sol.phi_c[i - 1] = u[i];
  sol.total_cost = detail::assignment_total(cost, sol.assignment);
  return sol;
}

// Brute force over every permutation; the second, independent route used to
// check solve_assignment. Only sensible for n <= 8.
inline DiscreteOTSolution enumerate_assignment(const Matrix& cost) {
  if (!cost.square())
    throw dimension_error("enumerate_assignment: cost matrix must be square");
  const std::size_t n = cost.rows;
  if (n == 0) throw usage_error("enumerate_assignment: empty instance");
  if (n > 8) throw usage_error("enumerate_assignment: n > 8 is intractable by design");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = detail::assignment_total(cost, perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double c = detail::assignment_total(cost, perm);
    if (c < best_cost) { best_cost = c; best = perm; }
  }
  DiscreteOTSolution sol;
  sol.assignment = std::move(best);
  sol.total_cost = best_cost;
  return sol;
}

// phi_c[i] = min_j (cost(i, j) - phi[j]), the discrete c-transform.
inline std::vector<double> c_transform_discrete(const std::vector<double>& phi,
                                                const Matrix& cost) {
  if (phi.size() != cost.cols)
    throw dimension_error("c_transform_discrete: |phi| != number of targets");
  std::vector<double> out(cost.rows);
  for (std::size_t i = 0; i < cost.rows; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cost.cols; ++j)
      m = std::min(m, cost.at(i, j) - phi[j]);
    out[i] = m;
  }
  return out;
}

// Mean primal cost minus the dual value mean(phi_c) + mean(phi). Non-negative
// whenever the stored potentials are dual feasible; about zero (<= 1e-7) at
// an exact optimum.
inline double dual_gap(const DiscreteOTSolution& sol, const Matrix& cost) {
  const std::size_t n = cost.rows;
  if (!cost.square() || sol.assignment.size() != n ||
      sol.phi.size() != cost.cols || sol.phi_c.size() != cost.rows)
    throw dimension_error("dual_gap: solution does not match cost dimensions");
  double dual = 0.0;
  for (double p : sol.phi_c) dual += p;
  for (double p : sol.phi) dual += p;
  dual /= static_cast<double>(n);
  return sol.total_cost / static_cast<double>(n) - dual;
}

// Piecewise-linear monotone map through (source_i, target_i) sample pairs;
// extrapolates with the boundary segment slopes.
class PiecewiseLinearMap {
 public:
  PiecewiseLinearMap(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {}

  double operator()(double x) const {
    const std::size_t n = xs_.size();
    if (n == 1) return ys_[0] + (x - xs_[0]);  // single point: unit-slope shift
    std::size_t hi = std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin();
    hi = std::clamp<std::size_t>(hi, 1, n - 1);
    const std::size_t lo = hi - 1;
    double t;
    if (xs_[hi] == xs_[lo]) t = 0.0;  // duplicate quantiles
    else t = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
    return ys_[lo] + t * (ys_[hi] - ys_[lo]);
  }

  const std::vector<double>& sources() const { return xs_; }
  const std::vector<double>& targets() const { return ys_; }

 private:
  std::vector<double> xs_, ys_;
};

// The 1-D OT map for convex costs: i-th source quantile to i-th target
// quantile (monotone rearrangement).
inline PiecewiseLinearMap monotone_map_1d(const std::vector<double>& source_sorted,
                                          const std::vector<double>& target_sorted) {
  if (source_sorted.size() != target_sorted.size())
    throw dimension_error("monotone_map_1d: sample counts differ");
  if (source_sorted.empty())
    throw usage_error("monotone_map_1d: empty samples");
  if (!std::is_sorted(source_sorted.begin(), source_sorted.end()) ||
      !std::is_sorted(target_sorted.begin(), target_sorted.end()))
    throw usage_error("monotone_map_1d: samples must be sorted ascending");
  return PiecewiseLinearMap(source_sorted, target_sorted);
}

struct GaussianParams {
  std::vector<double> mean;
  Matrix cov;
};

// T(x) = offset + A x, i.e. m_t + A(x - m_s) with offset = m_t - A m_s.
struct AffineMap {
  Matrix A;
  std::vector<double> offset;

  std::vector<double> operator()(const std::vector<double>& x) const {
    if (x.size() != A.cols)
      throw dimension_error("AffineMap: input dimension mismatch");
    std::vector<double> out(offset);
    for (std::size_t i = 0; i < A.rows; ++i)
      for (std::size_t j = 0; j < A.cols; ++j)
        out[i] += A.at(i, j) * x[j];
    return out;
  }
};

namespace detail {

// Cyclic Jacobi eigendecomposition of a small symmetric matrix.
// Returns eigenvalues in `eig` and orthonormal eigenvectors as columns of `q`.
inline void jacobi_eigen_sym(const Matrix& m, std::vector<double>& eig, Matrix& q) {
  const std::size_t n = m.rows;
  Matrix a = m;
  q = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) q.at(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
    if (off < 1e-28) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        if (std::abs(a.at(p, r)) < 1e-300) continue;
        const double theta = (a.at(r, r) - a.at(p, p)) / (2.0 * a.at(p, r));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p), akr = a.at(k, r);
          a.at(k, p) = c * akp - s * akr;
          a.at(k, r) = s * akp + c * akr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k), ark = a.at(r, k);
          a.at(p, k) = c * apk - s * ark;
          a.at(r, k) = s * apk + c * ark;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q.at(k, p), qkr = q.at(k, r);
          q.at(k, p) = c * qkp - s * qkr;
          q.at(k, r) = s * qkp + c * qkr;
        }
      }
    }
  }
  eig.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a.at(i, i);
}

inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

// Symmetric power A^p via eigendecomposition. Eigenvalues below 1e-12 are
// clamped there before the power to absorb SPD drift; genuinely negative
// spectra raise domain_error.
inline Matrix spd_pow(const Matrix& m, double p, const char* who) {
  const std::size_t n = m.rows;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m.at(i, j) - m.at(j, i)) > 1e-9 * std::max(1.0, std::abs(m.at(i, j))))
        throw domain_error(std::string(who) + ": covariance is not symmetric");
  std::vector<double> eig;
  Matrix q;
  jacobi_eigen_sym(m, eig, q);
  double max_eig = 0.0;
  for (double e : eig) max_eig = std::max(max_eig, std::abs(e));
  for (double& e : eig) {
    if (e < -1e-9 * std::max(1.0, max_eig))
      throw domain_error(std::string(who) + ": covariance is not positive definite");
    e = std::pow(std::max(e, 1e-12), p);
  }
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) d.at(i, i) = eig[i];
  Matrix qt(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) qt.at(i, j) = q.at(j, i);
  return mat_mul(mat_mul(q, d), qt);
}

}  // namespace detail

// Closed-form OT map between Gaussians under the squared-L2 base cost:
//   T(x) = m_t + A (x - m_s),  A = S^{-1/2} (S^{1/2} Cov_t S^{1/2})^{1/2} S^{-1/2}
// with S = Cov_s. Only meaningful for SquaredL2 with no penalty.
inline AffineMap gaussian_map_affine(const GaussianParams& source,
                                     const GaussianParams& target) {
  const std::size_t d = source.mean.size();
  if (source.cov.rows != d || source.cov.cols != d || target.mean.size() != d ||
      target.cov.rows != d || target.cov.cols != d)
    throw dimension_error("gaussian_map_affine: inconsistent dimensions");
  const Matrix s_half = detail::spd_pow(source.cov, 0.5, "gaussian_map_affine");
  const Matrix s_negh = detail::spd_pow(source.cov, -0.5, "gaussian_map_affine");
  const Matrix inner =
      detail::spd_pow(detail::mat_mul(detail::mat_mul(s_half, target.cov), s_half),
                      0.5, "gaussian_map_affine");
  AffineMap map;
  map.A = detail::mat_mul(detail::mat_mul(s_negh, inner), s_negh);
  map.offset = target.mean;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      map.offset[i] -= map.A.at(i, j) * source.mean[j];
  return map;
}

// Overload asserting the caller's cost is the one the closed form is valid for.
inline AffineMap gaussian_map_affine(const GaussianParams& source,
                                     const GaussianParams& target,
                                     const CostSpec& spec) {
  if (spec.base != BaseCost::SquaredL2 ||
      (spec.penalty != PenaltyKind::None && spec.weight > 0.0))
    throw contract_error(
        "gaussian_map_affine: closed form holds only for SquaredL2 base cost "
        "with no residual penalty");
  return gaussian_map_affine(source, target);
}

inline std::vector<std::vector<double>> sample_gaussian(const GaussianParams& g,
                                                        std::size_t n,
                                                        std::mt19937_64& rng) {
  const std::size_t d = g.mean.size();
  const Matrix root = detail::spd_pow(g.cov, 0.5, "sample_gaussian");
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(d);
    for (double& v : z) v = unit(rng);
    std::vector<double> x(g.mean);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) x[r] += root.at(r, c) * z[c];
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace rcot
