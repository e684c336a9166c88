#include "rcot/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/test_util.hpp"

using rcot::ImageTensor;
using rcot_test::random_tensor;

TEST(Tensor, SubIdenticalInputsGivesZeros) {
  std::mt19937_64 rng(7);
  const ImageTensor a = random_tensor(2, 3, 5, rng);
  const ImageTensor d = rcot::sub(a, a);
  for (double v : d.data()) EXPECT_EQ(v, 0.0);
}

TEST(Tensor, SubScalarCase) {
  const ImageTensor a(1, 1, 1, {0.8}), b(1, 1, 1, {0.3});
  EXPECT_DOUBLE_EQ(rcot::sub(a, b).at(0, 0, 0), 0.5);
}

TEST(Tensor, SubMatchesScalarLoop) {
  std::mt19937_64 rng(11);
  const ImageTensor a = random_tensor(1, 4, 4, rng);
  const ImageTensor b = random_tensor(1, 4, 4, rng);
  const ImageTensor d = rcot::sub(a, b);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      EXPECT_DOUBLE_EQ(d.at(0, y, x), a.at(0, y, x) - b.at(0, y, x));
}

TEST(Tensor, SubShapeMismatchThrows) {
  const ImageTensor a(1, 2, 2), b(1, 2, 3);
  EXPECT_THROW(rcot::sub(a, b), rcot::dimension_error);
}

TEST(Tensor, L2NormZeroAndPythagorean) {
  EXPECT_EQ(rcot::l2_norm(ImageTensor(1, 2, 2)), 0.0);
  const ImageTensor t(1, 1, 2, {3.0, 4.0});
  EXPECT_DOUBLE_EQ(rcot::l2_norm(t), 5.0);
}

TEST(Tensor, L2NormMatchesScalarLoop) {
  std::mt19937_64 rng(13);
  const ImageTensor a = random_tensor(1, 8, 8, rng);
  double ss = 0.0;
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) ss += a.at(0, y, x) * a.at(0, y, x);
  EXPECT_NEAR(rcot::l2_norm(a), std::sqrt(ss), 1e-15);
}

TEST(Tensor, CropFullExtentIsIdentity) {
  std::mt19937_64 rng(17);
  const ImageTensor a = random_tensor(2, 6, 6, rng);
  const ImageTensor c = rcot::crop_patch(a, 0, 0, 6);
  ASSERT_TRUE(c.same_shape(a));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(c.data()[i], a.data()[i]);
}

TEST(Tensor, CropTopLeftOfRamp) {
  std::vector<double> ramp(16);
  for (std::size_t i = 0; i < 16; ++i) ramp[i] = static_cast<double>(i);
  const ImageTensor a(1, 4, 4, std::move(ramp));
  const ImageTensor c = rcot::crop_patch(a, 0, 0, 2);
  EXPECT_EQ(c.at(0, 0, 0), 0.0);
  EXPECT_EQ(c.at(0, 0, 1), 1.0);
  EXPECT_EQ(c.at(0, 1, 0), 4.0);
  EXPECT_EQ(c.at(0, 1, 1), 5.0);
}

TEST(Tensor, CropRandomCoordinatesIndexMapping) {
  std::mt19937_64 rng(19);
  const ImageTensor a = random_tensor(3, 12, 10, rng);
  std::uniform_int_distribution<std::size_t> dt(0, 12 - 5), dl(0, 10 - 5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t top = dt(rng), left = dl(rng);
    const ImageTensor c = rcot::crop_patch(a, top, left, 5);
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t y = 0; y < 5; ++y)
        for (std::size_t x = 0; x < 5; ++x)
          ASSERT_EQ(c.at(ch, y, x), a.at(ch, top + y, left + x));
  }
}

// Canary values surround the crop window; none may leak into the output.
TEST(Tensor, CropNeverReadsOutsideBounds) {
  constexpr double canary = 1e300;
  std::vector<double> data(1 * 8 * 8, canary);
  for (std::size_t y = 2; y < 6; ++y)
    for (std::size_t x = 3; x < 7; ++x) data[y * 8 + x] = 0.25;
  const ImageTensor a(1, 8, 8, std::move(data));
  const ImageTensor c = rcot::crop_patch(a, 2, 3, 4);
  for (double v : c.data()) EXPECT_EQ(v, 0.25);
}

TEST(Tensor, CropOutOfBoundsThrows) {
  const ImageTensor a(1, 4, 4);
  EXPECT_THROW(rcot::crop_patch(a, 2, 0, 3), rcot::dimension_error);
  EXPECT_THROW(rcot::crop_patch(a, 0, 3, 2), rcot::dimension_error);
}

TEST(Tensor, ConstructorRejectsBadData) {
  EXPECT_THROW(ImageTensor(1, 2, 2, {1.0, 2.0, 3.0}), rcot::dimension_error);
  EXPECT_THROW(ImageTensor(1, 1, 2, {1.0, std::nan("")}), rcot::numeric_error);
  EXPECT_THROW(ImageTensor(0, 1, 1), rcot::dimension_error);
}

// Property: the induced distance is symmetric and satisfies the triangle
// inequality on random triples.
TEST(Tensor, DistanceSymmetryAndTriangle) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const ImageTensor a = random_tensor(1, 5, 5, rng);
    const ImageTensor b = random_tensor(1, 5, 5, rng);
    const ImageTensor c = random_tensor(1, 5, 5, rng);
    const double ab = rcot::l2_norm(rcot::sub(a, b));
    const double ba = rcot::l2_norm(rcot::sub(b, a));
    const double ac = rcot::l2_norm(rcot::sub(a, c));
    const double cb = rcot::l2_norm(rcot::sub(c, b));
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_LE(ab, ac + cb + 1e-12);
  }
}
