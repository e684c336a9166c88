#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include "rcot/errors.hpp"
#include "rcot/tensor.hpp"

namespace rcot {

// Residual penalties g(.) on the Fourier amplitudes. L1 and L2 are the
// working choices (L1 for structured degradations, L2 for noise); L05 is
// kept for the regularizer ablation only. None evaluates to zero.
enum class PenaltyKind { None, L1, L2, L05 };

// Complex 2-D spectrum of an ImageTensor, one plane per channel.
// Convention: unnormalized forward transform, 1/(H*W) on the inverse.
class FreqSpectrum {
 public:
  FreqSpectrum(std::size_t channels, std::size_t height, std::size_t width)
      : channels_(channels), height_(height), width_(width),
        bins_(channels * height * width) {
    if (channels == 0 || height == 0 || width == 0)
      throw dimension_error("FreqSpectrum: zero-sized shape");
  }

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return bins_.size(); }

  std::complex<double> at(std::size_t c, std::size_t ky, std::size_t kx) const {
    return bins_[(c * height_ + ky) * width_ + kx];
  }
  std::complex<double>& at(std::size_t c, std::size_t ky, std::size_t kx) {
    return bins_[(c * height_ + ky) * width_ + kx];
  }

  const std::vector<std::complex<double>>& bins() const { return bins_; }
  std::vector<std::complex<double>>& bins() { return bins_; }

 private:
  std::size_t channels_, height_, width_;
  std::vector<std::complex<double>> bins_;
};

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place unnormalized 1-D transform. Radix-2 for power-of-two lengths,
// direct O(n^2) sum otherwise (lengths here stay <= 64, so that is cheap).
// `sign` is -1 for the forward kernel e^{-2*pi*i*k*n/N}, +1 for the adjoint.
inline void fourier_1d(std::complex<double>* a, std::size_t n, int sign) {
  using cd = std::complex<double>;
  if (n == 1) return;
  if (is_pow2(n)) {
    // iterative Cooley-Tukey with bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
      const cd wlen(std::cos(ang), std::sin(ang));
      for (std::size_t i = 0; i < n; i += len) {
        cd w(1.0, 0.0);
        for (std::size_t k = 0; k < len / 2; ++k) {
          cd u = a[i + k];
          cd v = a[i + k + len / 2] * w;
          a[i + k] = u + v;
          a[i + k + len / 2] = u - v;
          w *= wlen;
        }
      }
    }
    return;
  }
  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cd acc(0.0, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
      const double ang =
          sign * 2.0 * std::numbers::pi * static_cast<double>(k) *
          static_cast<double>(m) / static_cast<double>(n);
      acc += a[m] * cd(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  for (std::size_t k = 0; k < n; ++k) a[k] = out[k];
}

// Unnormalized separable 2-D transform of one channel plane, in place.
inline void fourier_2d(std::complex<double>* plane, std::size_t h, std::size_t w,
                       int sign) {
  for (std::size_t y = 0; y < h; ++y) fourier_1d(plane + y * w, w, sign);
  std::vector<std::complex<double>> col(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) col[y] = plane[y * w + x];
    fourier_1d(col.data(), h, sign);
    for (std::size_t y = 0; y < h; ++y) plane[y * w + x] = col[y];
  }
}

}  // namespace detail

// Per-channel 2-D DFT, unnormalized forward convention.
inline FreqSpectrum dft2(const ImageTensor& a) {
  FreqSpectrum s(a.channels(), a.height(), a.width());
  const std::size_t plane = a.height() * a.width();
  auto data = a.data();
  for (std::size_t c = 0; c < a.channels(); ++c) {
    auto* dst = s.bins().data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i)
      dst[i] = std::complex<double>(data[c * plane + i], 0.0);
    detail::fourier_2d(dst, a.height(), a.width(), -1);
  }
  return s;
}

// Inverse transform with 1/(H*W) normalization. The spectrum must come from
// a real image: any imaginary residue above 1e-10 raises numeric_error.
inline ImageTensor idft2(const FreqSpectrum& s) {
  const std::size_t plane = s.height() * s.width();
  const double norm = 1.0 / static_cast<double>(plane);
  std::vector<double> out(s.size());
  std::vector<std::complex<double>> buf(plane);
  for (std::size_t c = 0; c < s.channels(); ++c) {
    for (std::size_t i = 0; i < plane; ++i) buf[i] = s.bins()[c * plane + i];
    detail::fourier_2d(buf.data(), s.height(), s.width(), +1);
    for (std::size_t i = 0; i < plane; ++i) {
      const std::complex<double> v = buf[i] * norm;
      if (std::abs(v.imag()) > 1e-10)
        throw numeric_error("idft2: imaginary residue " +
                            std::to_string(std::abs(v.imag())) +
                            " exceeds 1e-10; spectrum is not that of a real image");
      out[c * plane + i] = v.real();
    }
  }
  return ImageTensor(s.channels(), s.height(), s.width(), std::move(out));
}

// Penalty on the Fourier amplitudes |F(r)| over all bins and channels.
//   L1  -> sum of amplitudes, L2 -> Euclidean norm of amplitudes,
//   L05 -> sum of sqrt-amplitudes, None -> 0.
inline double freq_penalty(const ImageTensor& r, PenaltyKind kind) {
  if (kind == PenaltyKind::None) return 0.0;
  const FreqSpectrum s = dft2(r);
  double acc = 0.0;
  switch (kind) {
    case PenaltyKind::L1:
      for (const auto& z : s.bins()) acc += std::abs(z);
      return acc;
    case PenaltyKind::L2:
      for (const auto& z : s.bins()) acc += std::norm(z);
      return std::sqrt(acc);
    case PenaltyKind::L05:
      for (const auto& z : s.bins()) acc += std::sqrt(std::abs(z));
      return acc;
    case PenaltyKind::None:
      break;
  }
  return 0.0;
}

// Gradient of freq_penalty with respect to r. With z = F(r) and a per-bin
// sensitivity u_k (subgradient 0 at |z_k| = 0), the gradient is the real
// part of the unnormalized adjoint transform of u:
//   L1:  u_k = z_k / |z_k|
//   L2:  u_k = z_k / ||z||
//   L05: u_k = z_k / (2 |z_k|^{3/2})
inline ImageTensor freq_penalty_grad(const ImageTensor& r, PenaltyKind kind) {
  if (kind == PenaltyKind::None)
    return ImageTensor(r.channels(), r.height(), r.width());
  FreqSpectrum s = dft2(r);
  double l2 = 0.0;
  if (kind == PenaltyKind::L2) {
    for (const auto& z : s.bins()) l2 += std::norm(z);
    l2 = std::sqrt(l2);
  }
  for (auto& z : s.bins()) {
    const double amp = std::abs(z);
    if (amp == 0.0) { z = 0.0; continue; }
    switch (kind) {
      case PenaltyKind::L1:  z /= amp; break;
      case PenaltyKind::L2:  z = (l2 > 0.0) ? z / l2 : 0.0; break;
      case PenaltyKind::L05: z /= 2.0 * amp * std::sqrt(amp); break;
      case PenaltyKind::None: break;
    }
  }
  const std::size_t plane = s.height() * s.width();
  std::vector<double> grad(s.size());
  std::vector<std::complex<double>> buf(plane);
  for (std::size_t c = 0; c < s.channels(); ++c) {
    for (std::size_t i = 0; i < plane; ++i) buf[i] = s.bins()[c * plane + i];
    detail::fourier_2d(buf.data(), s.height(), s.width(), +1);
    for (std::size_t i = 0; i < plane; ++i) grad[c * plane + i] = buf[i].real();
  }
  return ImageTensor(s.channels(), s.height(), s.width(), std::move(grad));
}

}  // namespace rcot
