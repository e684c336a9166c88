#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "rcot/errors.hpp"
#include "rcot/spectral.hpp"
#include "rcot/tensor.hpp"

namespace rcot {

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double spectrum_gini = 0.0;
  double spectrum_flatness = 0.0;
};

// 10 log10(peak^2 / MSE), capped at 100 dB once MSE drops below peak^2 * 1e-10.
inline double psnr(const ImageTensor& a, const ImageTensor& b, double peak = 1.0) {
  detail::require_same_shape(a, b, "psnr");
  if (!(peak > 0.0)) throw usage_error("psnr: peak must be positive");
  double mse = 0.0;
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    mse += d * d;
  }
  mse /= static_cast<double>(da.size());
  if (mse < peak * peak * 1e-10) return 100.0;
  return 10.0 * std::log10(peak * peak / mse);
}

// Mean local SSIM with uniform 8x8 sliding windows and the standard
// stability constants for peak 1 (C1 = 0.01^2, C2 = 0.03^2). Uniform small
// windows instead of Gaussian 11x11 because desk patches are 32x32; the
// variant is fixed so numbers are self-consistent within this project.
inline double ssim(const ImageTensor& a, const ImageTensor& b) {
  detail::require_same_shape(a, b, "ssim");
  constexpr std::size_t win = 8;
  if (a.height() < win || a.width() < win)
    throw usage_error("ssim: image smaller than the 8x8 window");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const double inv_n = 1.0 / static_cast<double>(win * win);
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t c = 0; c < a.channels(); ++c)
    for (std::size_t y0 = 0; y0 + win <= a.height(); ++y0)
      for (std::size_t x0 = 0; x0 + win <= a.width(); ++x0) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (std::size_t y = y0; y < y0 + win; ++y)
          for (std::size_t x = x0; x < x0 + win; ++x) {
            const double va = a.at(c, y, x), vb = b.at(c, y, x);
            sa += va; sb += vb;
            saa += va * va; sbb += vb * vb; sab += va * vb;
          }
        const double ma = sa * inv_n, mb = sb * inv_n;
        const double va = saa * inv_n - ma * ma;
        const double vb = sbb * inv_n - mb * mb;
        const double cov = sab * inv_n - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++windows;
      }
  return total / static_cast<double>(windows);
}

// Sparsity statistics of the residual spectrum.
//   gini: Gini coefficient of the sorted DFT amplitudes (1 = maximally sparse).
//   flatness: geometric over arithmetic mean of amplitudes (1 = white/flat).
// Amplitudes below max * 1e-12 enter the geometric mean at that floor so a
// spectrum dominated by few bins reads as decidedly non-flat; an all-zero
// residual returns (0, 1) by convention.
inline std::pair<double, double> spectrum_stats(const ImageTensor& r) {
  const FreqSpectrum s = dft2(r);
  std::vector<double> amp(s.size());
  double max_amp = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    amp[i] = std::abs(s.bins()[i]);
    max_amp = std::max(max_amp, amp[i]);
  }
  if (max_amp == 0.0) return {0.0, 1.0};
  std::sort(amp.begin(), amp.end());
  const double n = static_cast<double>(amp.size());
  double sum = 0.0, weighted = 0.0, log_sum = 0.0;
  const double floor_amp = max_amp * 1e-12;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    sum += amp[i];
    weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * amp[i];
    log_sum += std::log(std::max(amp[i], floor_amp));
  }
  const double gini = weighted / (n * sum);
  const double flatness = std::exp(log_sum / n) / (sum / n);
  return {gini, flatness};
}

}  // namespace rcot
