#include "rcot/spectral.hpp"

#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "rcot/tensor.hpp"
#include "support/test_util.hpp"

using rcot::FreqSpectrum;
using rcot::ImageTensor;
using rcot::PenaltyKind;
using rcot_test::random_tensor;

TEST(Spectral, DftOfZerosIsZero) {
  const FreqSpectrum s = rcot::dft2(ImageTensor(2, 4, 4));
  for (const auto& z : s.bins()) EXPECT_EQ(std::abs(z), 0.0);
}

TEST(Spectral, LengthOneDftIsIdentity) {
  const ImageTensor a(1, 1, 1, {0.375});
  const FreqSpectrum s = rcot::dft2(a);
  EXPECT_DOUBLE_EQ(s.at(0, 0, 0).real(), 0.375);
  EXPECT_DOUBLE_EQ(s.at(0, 0, 0).imag(), 0.0);
}

// Two-point signal [1, -1]: X_0 = 0, X_1 = 1 - (-1) = 2.
TEST(Spectral, TwoPointDft) {
  const ImageTensor a(1, 1, 2, {1.0, -1.0});
  const FreqSpectrum s = rcot::dft2(a);
  EXPECT_NEAR(std::abs(s.at(0, 0, 0)), 0.0, 1e-15);
  EXPECT_NEAR(s.at(0, 0, 1).real(), 2.0, 1e-15);
  EXPECT_NEAR(s.at(0, 0, 1).imag(), 0.0, 1e-15);
}

TEST(Spectral, TwoPointInverse) {
  const ImageTensor a(1, 1, 2, {1.0, -1.0});
  const ImageTensor back = rcot::idft2(rcot::dft2(a));
  EXPECT_NEAR(back.at(0, 0, 0), 1.0, 1e-12);
  EXPECT_NEAR(back.at(0, 0, 1), -1.0, 1e-12);
}

TEST(Spectral, ZeroSpectrumInverseIsZeroImage) {
  const ImageTensor img = rcot::idft2(FreqSpectrum(1, 3, 3));
  for (double v : img.data()) EXPECT_EQ(v, 0.0);
}

TEST(Spectral, RoundTripRandomImages) {
  std::mt19937_64 rng(31);
  // power-of-two and odd sizes exercise both 1-D kernels
  const std::pair<std::size_t, std::size_t> shapes[] = {{8, 8}, {16, 32}, {5, 7}, {1, 6}};
  for (auto [h, w] : shapes) {
    const ImageTensor a = random_tensor(2, h, w, rng);
    const ImageTensor back = rcot::idft2(rcot::dft2(a));
    double max_err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      max_err = std::max(max_err, std::abs(a.data()[i] - back.data()[i]));
    EXPECT_LE(max_err, 1e-10) << h << "x" << w;
  }
}

TEST(Spectral, ParsevalIdentity) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const ImageTensor a = random_tensor(1, 16, 16, rng, -1.0, 1.0);
    double spatial = 0.0;
    for (double v : a.data()) spatial += v * v;
    const FreqSpectrum s = rcot::dft2(a);
    double freq = 0.0;
    for (const auto& z : s.bins()) freq += std::norm(z);
    freq /= 16.0 * 16.0;
    EXPECT_NEAR(freq, spatial, 1e-9 * std::max(1.0, spatial));
  }
}

TEST(Spectral, ImaginaryResidueDetected) {
  FreqSpectrum s(1, 1, 2);
  // asymmetric spectrum -> complex inverse
  s.at(0, 0, 1) = {0.0, 1.0};
  EXPECT_THROW(rcot::idft2(s), rcot::numeric_error);
}

TEST(Spectral, PenaltyOfZeroResidualIsZero) {
  const ImageTensor r(1, 4, 4);
  EXPECT_EQ(rcot::freq_penalty(r, PenaltyKind::L1), 0.0);
  EXPECT_EQ(rcot::freq_penalty(r, PenaltyKind::L2), 0.0);
  EXPECT_EQ(rcot::freq_penalty(r, PenaltyKind::L05), 0.0);
  EXPECT_EQ(rcot::freq_penalty(r, PenaltyKind::None), 0.0);
}

// Bins of [1, -1] are [0, 2]: both L1 and L2 give 2; L05 gives sqrt(2).
TEST(Spectral, PenaltyTwoPointCase) {
  const ImageTensor r(1, 1, 2, {1.0, -1.0});
  EXPECT_NEAR(rcot::freq_penalty(r, PenaltyKind::L1), 2.0, 1e-12);
  EXPECT_NEAR(rcot::freq_penalty(r, PenaltyKind::L2), 2.0, 1e-12);
  EXPECT_NEAR(rcot::freq_penalty(r, PenaltyKind::L05), std::sqrt(2.0), 1e-12);
}

// Constant residual concentrates everything in the DC bin: both penalties
// equal H*W*|mean| for a single channel.
TEST(Spectral, PenaltyConstantResidual) {
  const double value = -0.35;
  const ImageTensor r(1, 4, 6, std::vector<double>(24, value));
  const double expect = 4.0 * 6.0 * std::abs(value);
  EXPECT_NEAR(rcot::freq_penalty(r, PenaltyKind::L1), expect, 1e-9);
  EXPECT_NEAR(rcot::freq_penalty(r, PenaltyKind::L2), expect, 1e-9);
}

// Parseval corollary: the L2 penalty equals sqrt(H*W) * l2_norm(r).
TEST(Spectral, L2PenaltyParsevalCorollary) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const ImageTensor r = random_tensor(2, 8, 8, rng, -0.5, 0.5);
    const double expect = std::sqrt(64.0) * rcot::l2_norm(r);
    EXPECT_NEAR(rcot::freq_penalty(r, PenaltyKind::L2), expect,
                1e-9 * std::max(1.0, expect));
  }
}

// Absolute homogeneity in the residual scale.
TEST(Spectral, PenaltyHomogeneity) {
  std::mt19937_64 rng(43);
  const ImageTensor r = random_tensor(1, 8, 8, rng, -1.0, 1.0);
  const double alpha = -2.5;
  const ImageTensor ar = rcot::scale(r, alpha);
  for (auto kind : {PenaltyKind::L1, PenaltyKind::L2}) {
    const double base = rcot::freq_penalty(r, kind);
    EXPECT_NEAR(rcot::freq_penalty(ar, kind), std::abs(alpha) * base, 1e-9 * base);
  }
}

// The penalty gradient must match central finite differences; this pins the
// adjoint-transform derivation.
TEST(Spectral, PenaltyGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(47);
  for (auto kind : {PenaltyKind::L1, PenaltyKind::L2, PenaltyKind::L05}) {
    ImageTensor r = random_tensor(1, 4, 4, rng, -1.0, 1.0);
    const ImageTensor g = rcot::freq_penalty_grad(r, kind);
    std::vector<double> data(r.data().begin(), r.data().end());
    const double h = 1e-6;
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::vector<double> up = data, dn = data;
      up[i] += h;
      dn[i] -= h;
      const double fd = (rcot::freq_penalty(ImageTensor(1, 4, 4, up), kind) -
                         rcot::freq_penalty(ImageTensor(1, 4, 4, dn), kind)) /
                        (2.0 * h);
      EXPECT_NEAR(g.data()[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) <<
          "kind=" << static_cast<int>(kind) << " i=" << i;
    }
  }
}
