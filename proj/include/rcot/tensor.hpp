#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rcot/errors.hpp"

namespace rcot {

// Dense real-valued image or patch with shape (channels, height, width),
// stored row-major with width fastest. Values are 64-bit and nominally in
// [0, 1]; nothing here clamps -- clamping happens only at image export.
// Tensors are immutable after construction and safe to share across threads.
class ImageTensor {
 public:
  ImageTensor() = default;

  // All-zeros tensor of the given shape.
  ImageTensor(std::size_t channels, std::size_t height, std::size_t width)
      : channels_(channels), height_(height), width_(width),
        data_(channels * height * width, 0.0) {
    if (channels == 0 || height == 0 || width == 0)
      throw dimension_error("ImageTensor: zero-sized shape (" + shape_str() + ")");
  }

  // Takes ownership of `data`; length must equal channels*height*width and
  // every entry must be finite.
  ImageTensor(std::size_t channels, std::size_t height, std::size_t width,
              std::vector<double> data)
      : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (channels == 0 || height == 0 || width == 0)
      throw dimension_error("ImageTensor: zero-sized shape (" + shape_str() + ")");
    if (data_.size() != channels_ * height_ * width_)
      throw dimension_error("ImageTensor: data length " + std::to_string(data_.size()) +
                            " does not match shape " + shape_str());
    for (double v : data_)
      if (!std::isfinite(v))
        throw numeric_error("ImageTensor: non-finite entry");
  }

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }

  std::span<const double> data() const { return data_; }

  bool same_shape(const ImageTensor& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  std::string shape_str() const {
    return std::to_string(channels_) + "x" + std::to_string(height_) + "x" +
           std::to_string(width_);
  }

 private:
  std::size_t channels_ = 0, height_ = 0, width_ = 0;
  std::vector<double> data_;
};

namespace detail {
inline void require_same_shape(const ImageTensor& a, const ImageTensor& b,
                               const char* op) {
  if (!a.same_shape(b))
    throw dimension_error(std::string(op) + ": shape mismatch " + a.shape_str() +
                          " vs " + b.shape_str());
}
}  // namespace detail

// Elementwise a - b. Used for residuals r = y - x.
inline ImageTensor sub(const ImageTensor& a, const ImageTensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] - db[i];
  return ImageTensor(a.channels(), a.height(), a.width(), std::move(out));
}

inline ImageTensor add(const ImageTensor& a, const ImageTensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  return ImageTensor(a.channels(), a.height(), a.width(), std::move(out));
}

inline ImageTensor scale(const ImageTensor& a, double k) {
  std::vector<double> out(a.size());
  auto da = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = k * da[i];
  return ImageTensor(a.channels(), a.height(), a.width(), std::move(out));
}

// Euclidean norm of the flattened data.
inline double l2_norm(const ImageTensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

// size x size sub-image across all channels with top-left corner (top, left).
inline ImageTensor crop_patch(const ImageTensor& a, std::size_t top,
                              std::size_t left, std::size_t size) {
  if (size == 0 || top + size > a.height() || left + size > a.width())
    throw dimension_error("crop_patch: window [" + std::to_string(top) + "," +
                          std::to_string(left) + "]+" + std::to_string(size) +
                          " out of bounds for " + a.shape_str());
  std::vector<double> out;
  out.reserve(a.channels() * size * size);
  for (std::size_t c = 0; c < a.channels(); ++c)
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x)
        out.push_back(a.at(c, top + y, left + x));
  return ImageTensor(a.channels(), size, size, std::move(out));
}

}  // namespace rcot
