#pragma once

// Synthetic degradations for the four task families (noise, rain streaks,
// haze, bicubic down-up), procedurally generated clean images, and dataset
// assembly for paired / partially paired / unpaired training.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "rcot/errors.hpp"
#include "rcot/tensor.hpp"

namespace rcot {

enum class DegradationKind { GaussianNoise, RainStreaks, Haze, DownUp };

struct DegradationSpec {
  DegradationKind kind = DegradationKind::GaussianNoise;
  double sigma = 25.0;          // noise std on the 0..255 scale
  int streak_count = 20;        // rain: segments per patch (default tuned per 64x64)
  double streak_angle_min_deg = 70.0, streak_angle_max_deg = 110.0;
  double streak_intensity_min = 0.2, streak_intensity_max = 0.5;
  double transmission = 0.6;    // haze t in (0, 1]
  double airlight = 0.9;        // haze A in [0, 1]
  int scale_factor = 2;         // down_up factor, one of {2, 3, 4}
  std::uint64_t seed = 0;

  void validate() const {
    if (sigma < 0.0) throw usage_error("DegradationSpec: sigma must be >= 0");
    if (streak_count < 0) throw usage_error("DegradationSpec: streak_count must be >= 0");
    if (!(streak_intensity_min >= 0.0) || streak_intensity_max < streak_intensity_min)
      throw usage_error("DegradationSpec: bad streak intensity range");
    if (!(transmission > 0.0 && transmission <= 1.0))
      throw usage_error("DegradationSpec: transmission must be in (0, 1]");
    if (!(airlight >= 0.0 && airlight <= 1.0))
      throw usage_error("DegradationSpec: airlight must be in [0, 1]");
    if (scale_factor != 2 && scale_factor != 3 && scale_factor != 4)
      throw usage_error("DegradationSpec: scale_factor must be 2, 3 or 4");
  }
};

namespace detail {

inline double cubic_kernel(double x) {
  // Catmull-Rom (a = -0.5)
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

inline ImageTensor bicubic_resize(const ImageTensor& in, std::size_t oh,
                                  std::size_t ow) {
  const auto h = static_cast<std::ptrdiff_t>(in.height());
  const auto w = static_cast<std::ptrdiff_t>(in.width());
  const double sy = static_cast<double>(in.height()) / static_cast<double>(oh);
  const double sx = static_cast<double>(in.width()) / static_cast<double>(ow);
  std::vector<double> out;
  out.reserve(in.channels() * oh * ow);
  for (std::size_t c = 0; c < in.channels(); ++c)
    for (std::size_t y = 0; y < oh; ++y) {
      const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
      const auto y0 = static_cast<std::ptrdiff_t>(std::floor(fy));
      for (std::size_t x = 0; x < ow; ++x) {
        const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
        const auto x0 = static_cast<std::ptrdiff_t>(std::floor(fx));
        double acc = 0.0, wsum = 0.0;
        for (std::ptrdiff_t dy = -1; dy <= 2; ++dy)
          for (std::ptrdiff_t dx = -1; dx <= 2; ++dx) {
            const double wk = cubic_kernel(fy - static_cast<double>(y0 + dy)) *
                              cubic_kernel(fx - static_cast<double>(x0 + dx));
            if (wk == 0.0) continue;
            const std::size_t yy = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y0 + dy, 0, h - 1));
            const std::size_t xx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x0 + dx, 0, w - 1));
            acc += wk * in.at(c, yy, xx);
            wsum += wk;
          }
        out.push_back(acc / wsum);
      }
    }
  return ImageTensor(in.channels(), oh, ow, std::move(out));
}

}  // namespace detail

// Applies the degradation model. Deterministic given spec.seed; the output
// is x plus the analytic residual of the model, with no clamping.
inline ImageTensor degrade(const ImageTensor& x, const DegradationSpec& spec) {
  spec.validate();
  const std::size_t c = x.channels(), h = x.height(), w = x.width();
  std::mt19937_64 rng(spec.seed);
  std::vector<double> out(x.data().begin(), x.data().end());
  switch (spec.kind) {
    case DegradationKind::GaussianNoise: {
      std::normal_distribution<double> noise(0.0, spec.sigma / 255.0);
      if (spec.sigma > 0.0)
        for (double& v : out) v += noise(rng);
      break;
    }
    case DegradationKind::RainStreaks: {
      std::uniform_real_distribution<double> ux(0.0, static_cast<double>(w));
      std::uniform_real_distribution<double> uy(0.0, static_cast<double>(h));
      std::uniform_real_distribution<double> uang(spec.streak_angle_min_deg,
                                                  spec.streak_angle_max_deg);
      std::uniform_real_distribution<double> ulen(static_cast<double>(h) * 0.4,
                                                  static_cast<double>(h) * 0.9);
      std::uniform_real_distribution<double> uint_(spec.streak_intensity_min,
                                                   spec.streak_intensity_max);
      std::vector<char> hit(h * w);
      for (int s = 0; s < spec.streak_count; ++s) {
        const double cx = ux(rng), cy = uy(rng);
        const double ang = uang(rng) * std::numbers::pi / 180.0;
        const double len = ulen(rng);
        const double val = uint_(rng);
        std::fill(hit.begin(), hit.end(), 0);
        // walk the segment in half-pixel steps; each pixel lights up once
        const double dx = std::cos(ang), dy = std::sin(ang);
        const int steps = static_cast<int>(len * 2.0);
        for (int i = 0; i <= steps; ++i) {
          const double t = static_cast<double>(i) * 0.5 - len * 0.5;
          const auto px = static_cast<std::ptrdiff_t>(std::lround(cx + t * dx));
          const auto py = static_cast<std::ptrdiff_t>(std::lround(cy + t * dy));
          if (px < 0 || py < 0 || px >= static_cast<std::ptrdiff_t>(w) ||
              py >= static_cast<std::ptrdiff_t>(h))
            continue;
          const std::size_t idx = static_cast<std::size_t>(py) * w + static_cast<std::size_t>(px);
          if (hit[idx]) continue;
          hit[idx] = 1;
          for (std::size_t ci = 0; ci < c; ++ci) out[ci * h * w + idx] += val;
        }
      }
      break;
    }
    case DegradationKind::Haze: {
      // y = t*x + A*(1-t), written as x + (1-t)(A - x)
      const double t = spec.transmission, a = spec.airlight;
      for (double& v : out) v += (1.0 - t) * (a - v);
      break;
    }
    case DegradationKind::DownUp: {
      const auto f = static_cast<std::size_t>(spec.scale_factor);
      const std::size_t lh = std::max<std::size_t>(1, h / f);
      const std::size_t lw = std::max<std::size_t>(1, w / f);
      return detail::bicubic_resize(detail::bicubic_resize(x, lh, lw), h, w);
    }
  }
  return ImageTensor(c, h, w, std::move(out));
}

// Procedurally generated piecewise-smooth clean image: a global gradient,
// a few filled triangles, and a mild low-frequency texture, rescaled into
// [0.05, 0.95] so degradations have headroom.
inline ImageTensor synth_clean_image(std::size_t channels, std::size_t height,
                                     std::size_t width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> us(-1.0, 1.0);
  std::vector<double> base(height * width, 0.0);
  const double g0 = u01(rng), gx = us(rng), gy = us(rng);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      base[y * width + x] = g0 +
          gx * static_cast<double>(x) / static_cast<double>(width) +
          gy * static_cast<double>(y) / static_cast<double>(height);
  const int n_tri = 2 + static_cast<int>(u01(rng) * 3.0);
  for (int tnum = 0; tnum < n_tri; ++tnum) {
    double px[3], py[3];
    for (int i = 0; i < 3; ++i) {
      px[i] = u01(rng) * static_cast<double>(width);
      py[i] = u01(rng) * static_cast<double>(height);
    }
    const double delta = us(rng) * 0.8;
    auto edge = [](double ax, double ay, double bx, double by, double x, double y) {
      return (bx - ax) * (y - ay) - (by - ay) * (x - ax);
    };
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const double cx = static_cast<double>(x) + 0.5, cy = static_cast<double>(y) + 0.5;
        const double e0 = edge(px[0], py[0], px[1], py[1], cx, cy);
        const double e1 = edge(px[1], py[1], px[2], py[2], cx, cy);
        const double e2 = edge(px[2], py[2], px[0], py[0], cx, cy);
        if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0))
          base[y * width + x] += delta;
      }
  }
  const double fx = 1.0 + u01(rng) * 3.0, fy = 1.0 + u01(rng) * 3.0;
  const double phase = u01(rng) * 2.0 * std::numbers::pi;
  const double amp = 0.05 + 0.1 * u01(rng);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      base[y * width + x] += amp *
          std::sin(2.0 * std::numbers::pi *
                       (fx * static_cast<double>(x) / static_cast<double>(width) +
                        fy * static_cast<double>(y) / static_cast<double>(height)) +
                   phase);
  double lo = base[0], hi = base[0];
  for (double v : base) { lo = std::min(lo, v); hi = std::max(hi, v); }
  const double span = (hi > lo) ? hi - lo : 1.0;
  std::vector<double> data;
  data.reserve(channels * height * width);
  for (std::size_t ci = 0; ci < channels; ++ci) {
    const double tone = (channels > 1) ? 0.9 + 0.1 * u01(rng) : 1.0;
    for (double v : base)
      data.push_back((0.05 + 0.9 * (v - lo) / span) * tone);
  }
  return ImageTensor(channels, height, width, std::move(data));
}

inline std::vector<ImageTensor> synth_clean_set(std::size_t count,
                                                std::size_t channels,
                                                std::size_t size,
                                                std::uint64_t seed) {
  std::vector<ImageTensor> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(synth_clean_image(channels, size, size, seed * 1000003ULL + i));
  return out;
}

// Clean and degraded sample streams in independently shuffled exposure
// orders. Correspondence is exposed only for the paired subset; with
// paired_fraction = 0 no consumer can recover the alignment from this handle.
class DatasetHandle {
 public:
  DatasetHandle(std::vector<ImageTensor> clean, std::vector<ImageTensor> degraded,
                std::vector<std::ptrdiff_t> pair_of_degraded, double paired_fraction)
      : clean_(std::move(clean)), degraded_(std::move(degraded)),
        pair_of_degraded_(std::move(pair_of_degraded)),
        paired_fraction_(paired_fraction) {
    if (clean_.empty() || degraded_.empty())
      throw usage_error("DatasetHandle: empty sample set");
    if (pair_of_degraded_.size() != degraded_.size())
      throw dimension_error("DatasetHandle: pairing table size mismatch");
    for (const auto& t : clean_) detail::require_same_shape(clean_[0], t, "DatasetHandle");
    for (const auto& t : degraded_) detail::require_same_shape(clean_[0], t, "DatasetHandle");
    for (std::ptrdiff_t p : pair_of_degraded_)
      if (p >= static_cast<std::ptrdiff_t>(clean_.size()))
        throw dimension_error("DatasetHandle: pairing index out of range");
  }

  std::size_t clean_count() const { return clean_.size(); }
  std::size_t degraded_count() const { return degraded_.size(); }
  const ImageTensor& clean(std::size_t i) const { return clean_[i]; }
  const ImageTensor& degraded(std::size_t i) const { return degraded_[i]; }
  double paired_fraction() const { return paired_fraction_; }

  std::optional<std::size_t> paired_clean_index(std::size_t degraded_idx) const {
    const std::ptrdiff_t p = pair_of_degraded_[degraded_idx];
    if (p < 0) return std::nullopt;
    return static_cast<std::size_t>(p);
  }

  std::size_t paired_count() const {
    std::size_t n = 0;
    for (std::ptrdiff_t p : pair_of_degraded_)
      if (p >= 0) ++n;
    return n;
  }

 private:
  std::vector<ImageTensor> clean_, degraded_;
  std::vector<std::ptrdiff_t> pair_of_degraded_;
  double paired_fraction_;
};

// Degrades every clean sample (per-sample seeds derived from spec.seed),
// keeps correspondence visible for round(paired_fraction * n) samples, and
// independently permutes both exposure orders.
inline DatasetHandle build_dataset(const std::vector<ImageTensor>& clean,
                                   const DegradationSpec& spec,
                                   double paired_fraction, std::uint64_t seed) {
  if (clean.empty()) throw usage_error("build_dataset: no clean samples");
  if (!(paired_fraction >= 0.0 && paired_fraction <= 1.0))
    throw usage_error("build_dataset: paired_fraction must be in [0, 1]");
  spec.validate();
  const std::size_t n = clean.size();
  std::vector<ImageTensor> degraded;
  degraded.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    DegradationSpec s = spec;
    s.seed = spec.seed * 2654435761ULL + i + 1;
    degraded.push_back(degrade(clean[i], s));
  }

  std::mt19937_64 rng(seed);
  const auto n_paired = static_cast<std::size_t>(
      std::llround(paired_fraction * static_cast<double>(n)));
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<char> is_paired(n, 0);
  for (std::size_t i = 0; i < n_paired; ++i) is_paired[ids[i]] = 1;

  std::vector<std::size_t> perm_clean(n), perm_degraded(n);
  std::iota(perm_clean.begin(), perm_clean.end(), 0);
  std::iota(perm_degraded.begin(), perm_degraded.end(), 0);
  std::shuffle(perm_clean.begin(), perm_clean.end(), rng);
  std::shuffle(perm_degraded.begin(), perm_degraded.end(), rng);

  std::vector<std::size_t> clean_pos(n);  // source index -> exposed position
  for (std::size_t i = 0; i < n; ++i) clean_pos[perm_clean[i]] = i;

  std::vector<ImageTensor> clean_exposed, degraded_exposed;
  clean_exposed.reserve(n);
  degraded_exposed.reserve(n);
  std::vector<std::ptrdiff_t> pairing(n, -1);
  for (std::size_t i = 0; i < n; ++i) clean_exposed.push_back(clean[perm_clean[i]]);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = perm_degraded[i];
    degraded_exposed.push_back(degraded[src]);
    if (is_paired[src]) pairing[i] = static_cast<std::ptrdiff_t>(clean_pos[src]);
  }
  return DatasetHandle(std::move(clean_exposed), std::move(degraded_exposed),
                       std::move(pairing), paired_fraction);
}

// All exposed (degraded, clean) pairs, handy for evaluation sets.
inline std::vector<std::pair<ImageTensor, ImageTensor>> paired_view(
    const DatasetHandle& ds) {
  std::vector<std::pair<ImageTensor, ImageTensor>> out;
  for (std::size_t i = 0; i < ds.degraded_count(); ++i)
    if (auto j = ds.paired_clean_index(i))
      out.emplace_back(ds.degraded(i), ds.clean(*j));
  return out;
}

}  // namespace rcot
