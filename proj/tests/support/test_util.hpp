#pragma once

// Shared helpers for the test suites: random data generation and the
// central-finite-difference gradient oracle. These stay independent of the
// library's gradient path on purpose.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "rcot/params.hpp"
#include "rcot/tensor.hpp"

namespace rcot_test {

inline rcot::ImageTensor random_tensor(std::size_t c, std::size_t h, std::size_t w,
                                       std::mt19937_64& rng, double lo = 0.0,
                                       double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(c * h * w);
  for (double& v : data) v = dist(rng);
  return rcot::ImageTensor(c, h, w, std::move(data));
}

struct FdMismatch {
  std::string entry;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

// Central finite differences of `loss` with respect to every parameter in
// `stores`, compared against the gradients currently held in the stores.
// `loss` must be a pure function of the parameter values. Returns the worst
// relative error seen (with absolute floor `abs_floor`), and reports the
// first offender above `tol` through `out` when given.
inline double max_fd_rel_error(const std::vector<rcot::ParamStore*>& stores,
                               const std::function<double()>& loss,
                               double step = 1e-5, double abs_floor = 1e-8,
                               FdMismatch* out = nullptr, double tol = 1e-4) {
  double worst = 0.0;
  for (rcot::ParamStore* store : stores) {
    for (std::size_t e = 0; e < store->size(); ++e) {
      auto& entry = store->entry(e);
      for (std::size_t i = 0; i < entry.count(); ++i) {
        const double saved = entry.value[i];
        entry.value[i] = saved + step;
        const double up = loss();
        entry.value[i] = saved - step;
        const double down = loss();
        entry.value[i] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double an = entry.grad[i];
        const double denom = std::max({std::abs(fd), std::abs(an), abs_floor});
        const double rel = std::abs(fd - an) / denom;
        if (rel > worst) {
          worst = rel;
          if (out && rel > tol)
            *out = {entry.name, i, an, fd, rel};
        }
      }
    }
  }
  return worst;
}

}  // namespace rcot_test
