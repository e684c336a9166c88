#pragma once

// Persistence and export: 8-bit PNG writing (values clamped only here),
// CSV emission with stable schemas, the versioned binary checkpoint
// container, and a small chart renderer for the ablation reports.

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "rcot/errors.hpp"
#include "rcot/params.hpp"
#include "rcot/tensor.hpp"
#include "rcot/train.hpp"

namespace rcot::io {

// ---------------------------------------------------------------- PNG ----

namespace detail {

inline void push_u32_be(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

inline void push_chunk(std::vector<unsigned char>& out, const char type[4],
                       const std::vector<unsigned char>& data) {
  push_u32_be(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + data.size())));
  push_u32_be(out, crc);
}

inline unsigned char to_byte(double v) {
  v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<unsigned char>(v * 255.0 + 0.5);
}

}  // namespace detail

// Writes an 8-bit PNG: grayscale for one channel, RGB for three. Values are
// clamped to [0, 1] at this boundary only.
inline void write_png(const std::string& path, const ImageTensor& img) {
  if (img.channels() != 1 && img.channels() != 3)
    throw usage_error("write_png: supports 1 or 3 channels, got " +
                      std::to_string(img.channels()));
  const std::size_t w = img.width(), h = img.height();
  const std::size_t bpp = img.channels();
  std::vector<unsigned char> raw;
  raw.reserve(h * (1 + w * bpp));
  for (std::size_t y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < bpp; ++c)
        raw.push_back(detail::to_byte(img.at(c, y, x)));
  }
  uLongf comp_len = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_len);
  if (::compress2(comp.data(), &comp_len, raw.data(),
                  static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw io_error("write_png: deflate failed");
  comp.resize(comp_len);

  std::vector<unsigned char> png = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<unsigned char> ihdr;
  detail::push_u32_be(ihdr, static_cast<std::uint32_t>(w));
  detail::push_u32_be(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);                                  // bit depth
  ihdr.push_back(img.channels() == 3 ? 2 : 0);        // color type
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  detail::push_chunk(png, "IHDR", ihdr);
  detail::push_chunk(png, "IDAT", comp);
  detail::push_chunk(png, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("write_png: cannot open " + path);
  f.write(reinterpret_cast<const char*>(png.data()),
          static_cast<std::streamsize>(png.size()));
  if (!f) throw io_error("write_png: write failed for " + path);
}

// Reads back width/height/channels from a PNG header (grid-layout checks).
struct PngInfo {
  std::uint32_t width = 0, height = 0;
  int channels = 0;
};

inline PngInfo read_png_info(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("read_png_info: cannot open " + path);
  unsigned char head[33];
  f.read(reinterpret_cast<char*>(head), 33);
  if (!f || std::memcmp(head, "\x89PNG\r\n\x1a\n", 8) != 0)
    throw io_error("read_png_info: not a PNG file: " + path);
  PngInfo info;
  info.width = (head[16] << 24) | (head[17] << 16) | (head[18] << 8) | head[19];
  info.height = (head[20] << 24) | (head[21] << 16) | (head[22] << 8) | head[23];
  info.channels = head[25] == 2 ? 3 : 1;
  return info;
}

// ---------------------------------------------------------------- CSV ----

namespace detail {
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

// Schema: epoch,loss_frot,loss_paired,psnr,ssim,spectrum_gini,wallclock_s
inline void write_history_csv(const std::string& path,
                              const std::vector<EpochRecord>& history) {
  std::ofstream f(path);
  if (!f) throw io_error("write_history_csv: cannot open " + path);
  f << "epoch,loss_frot,loss_paired,psnr,ssim,spectrum_gini,wallclock_s\n";
  for (const auto& r : history)
    f << r.epoch << ',' << detail::fmt_double(r.loss_frot) << ','
      << detail::fmt_double(r.loss_paired) << ',' << detail::fmt_double(r.psnr)
      << ',' << detail::fmt_double(r.ssim) << ','
      << detail::fmt_double(r.spectrum_gini) << ','
      << detail::fmt_double(r.wallclock_s) << '\n';
  if (!f) throw io_error("write_history_csv: write failed for " + path);
}

// Schema: metric,value (one row per entry).
inline void write_report_csv(const std::string& path,
                             const std::vector<std::pair<std::string, double>>& rows) {
  std::ofstream f(path);
  if (!f) throw io_error("write_report_csv: cannot open " + path);
  f << "metric,value\n";
  for (const auto& [k, v] : rows) f << k << ',' << detail::fmt_double(v) << '\n';
}

// Schema: free header + rows of strings, used by the ablation tables.
inline void write_table_csv(const std::string& path,
                            const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& rows) {
  std::ofstream f(path);
  if (!f) throw io_error("write_table_csv: cannot open " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    f << header[i] << (i + 1 < header.size() ? "," : "");
  f << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      f << row[i] << (i + 1 < row.size() ? "," : "");
    f << '\n';
  }
}

// --------------------------------------------------------- checkpoint ----

// Layout (little endian):
//   magic "RCOTCKP1" | u32 version | u32 spec_len | spec json bytes
//   u32 store_count | per store: name, u32 entry_count,
//     per entry: name, u32 rank, u64 dims[rank], u64 count, f64 values[count]
inline constexpr char kCheckpointMagic[8] = {'R', 'C', 'O', 'T', 'C', 'K', 'P', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_string(std::ofstream& f, const std::string& s) {
  write_pod(f, static_cast<std::uint32_t>(s.size()));
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T read_pod(std::ifstream& f, const char* section) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw io_error(std::string("checkpoint truncated in ") + section);
  return v;
}

inline std::string read_string(std::ifstream& f, const char* section) {
  const auto len = read_pod<std::uint32_t>(f, section);
  if (len > (1u << 20))
    throw io_error(std::string("checkpoint corrupt: oversized string in ") + section);
  std::string s(len, '\0');
  f.read(s.data(), len);
  if (!f) throw io_error(std::string("checkpoint truncated in ") + section);
  return s;
}

}  // namespace detail

struct Checkpoint {
  std::string spec_json;
  std::vector<std::pair<std::string, ParamStore>> stores;
};

inline void save_checkpoint(
    const std::string& path, const std::string& spec_json,
    const std::vector<std::pair<std::string, const ParamStore*>>& stores) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("save_checkpoint: cannot open " + path);
  f.write(kCheckpointMagic, 8);
  detail::write_pod(f, kCheckpointVersion);
  detail::write_string(f, spec_json);
  detail::write_pod(f, static_cast<std::uint32_t>(stores.size()));
  for (const auto& [name, store] : stores) {
    detail::write_string(f, name);
    detail::write_pod(f, static_cast<std::uint32_t>(store->size()));
    for (std::size_t e = 0; e < store->size(); ++e) {
      const ParamEntry& entry = store->entry(e);
      detail::write_string(f, entry.name);
      detail::write_pod(f, static_cast<std::uint32_t>(entry.shape.size()));
      for (std::size_t d : entry.shape)
        detail::write_pod(f, static_cast<std::uint64_t>(d));
      detail::write_pod(f, static_cast<std::uint64_t>(entry.count()));
      f.write(reinterpret_cast<const char*>(entry.value.data()),
              static_cast<std::streamsize>(entry.count() * sizeof(double)));
    }
  }
  if (!f) throw io_error("save_checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw io_error("load_checkpoint: bad magic bytes (not a checkpoint file)");
  const auto version = detail::read_pod<std::uint32_t>(f, "header");
  if (version != kCheckpointVersion)
    throw io_error("load_checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  ck.spec_json = detail::read_string(f, "spec block");
  const auto n_stores = detail::read_pod<std::uint32_t>(f, "store table");
  for (std::uint32_t s = 0; s < n_stores; ++s) {
    const std::string store_name = detail::read_string(f, "store name");
    ParamStore store;
    const auto n_entries = detail::read_pod<std::uint32_t>(f, store_name.c_str());
    for (std::uint32_t e = 0; e < n_entries; ++e) {
      const std::string entry_name = detail::read_string(f, store_name.c_str());
      const auto rank = detail::read_pod<std::uint32_t>(f, entry_name.c_str());
      if (rank > 8)
        throw io_error("load_checkpoint: corrupt rank in " + entry_name);
      std::vector<std::size_t> shape(rank);
      for (auto& d : shape)
        d = static_cast<std::size_t>(
            detail::read_pod<std::uint64_t>(f, entry_name.c_str()));
      const auto count = detail::read_pod<std::uint64_t>(f, entry_name.c_str());
      ParamEntry& entry = store.add(entry_name, shape);
      if (entry.count() != count)
        throw io_error("load_checkpoint: shape/count mismatch in " + entry_name);
      f.read(reinterpret_cast<char*>(entry.value.data()),
             static_cast<std::streamsize>(count * sizeof(double)));
      if (!f)
        throw io_error("checkpoint truncated in values of " + entry_name);
    }
    ck.stores.emplace_back(store_name, std::move(store));
  }
  return ck;
}

// -------------------------------------------------------------- charts ----

// Minimal raster canvas for the ablation bar charts and sweep curves.
class Canvas {
 public:
  Canvas(std::size_t h, std::size_t w, double r = 1.0, double g = 1.0, double b = 1.0)
      : h_(h), w_(w), data_(3 * h * w) {
    for (std::size_t i = 0; i < h * w; ++i) {
      data_[i] = r;
      data_[h * w + i] = g;
      data_[2 * h * w + i] = b;
    }
  }

  void fill_rect(std::ptrdiff_t y0, std::ptrdiff_t x0, std::ptrdiff_t y1,
                 std::ptrdiff_t x1, double r, double g, double b) {
    for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, y0);
         y < std::min<std::ptrdiff_t>(h_, y1); ++y)
      for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(0, x0);
           x < std::min<std::ptrdiff_t>(w_, x1); ++x)
        set(y, x, r, g, b);
  }

  void draw_line(double y0, double x0, double y1, double x1, double r, double g,
                 double b) {
    const double len = std::max(std::abs(y1 - y0), std::abs(x1 - x0));
    const int steps = std::max(1, static_cast<int>(len * 2.0));
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const auto y = static_cast<std::ptrdiff_t>(std::lround(y0 + t * (y1 - y0)));
      const auto x = static_cast<std::ptrdiff_t>(std::lround(x0 + t * (x1 - x0)));
      if (y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(h_) &&
          x < static_cast<std::ptrdiff_t>(w_))
        set(y, x, r, g, b);
    }
  }

  ImageTensor tensor() const { return ImageTensor(3, h_, w_, data_); }

 private:
  void set(std::ptrdiff_t y, std::ptrdiff_t x, double r, double g, double b) {
    data_[static_cast<std::size_t>(y) * w_ + x] = r;
    data_[h_ * w_ + static_cast<std::size_t>(y) * w_ + x] = g;
    data_[2 * h_ * w_ + static_cast<std::size_t>(y) * w_ + x] = b;
  }

  std::size_t h_, w_;
  std::vector<double> data_;
};

// Bars scaled to [0, max]; one colored bar per labeled value.
inline void write_bar_chart_png(const std::string& path,
                                const std::vector<std::pair<std::string, double>>& bars) {
  if (bars.empty()) throw usage_error("write_bar_chart_png: no bars");
  const std::size_t h = 240, w = 80 + bars.size() * 90;
  Canvas canvas(h, w);
  double vmax = 0.0;
  for (const auto& [_, v] : bars) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;
  canvas.draw_line(10, 50, h - 30.0, 50, 0, 0, 0);
  canvas.draw_line(h - 30.0, 50, h - 30.0, w - 10.0, 0, 0, 0);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double frac = bars[i].second / vmax;
    const auto top = static_cast<std::ptrdiff_t>((h - 30) - frac * (h - 50));
    const auto x0 = static_cast<std::ptrdiff_t>(70 + i * 90);
    canvas.fill_rect(top, x0, h - 30, x0 + 60, 0.25 + 0.3 * (i % 2), 0.45, 0.8);
  }
  write_png(path, canvas.tensor());
}

// Connected polyline over (x, y) points with axes, for parameter sweeps.
inline void write_curve_png(const std::string& path,
                            const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw usage_error("write_curve_png: need >= 2 points");
  const std::size_t h = 240, w = 360;
  Canvas canvas(h, w);
  double xmin = points[0].first, xmax = xmin, ymin = points[0].second, ymax = ymin;
  for (const auto& [x, y] : points) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  canvas.draw_line(10, 40, h - 30.0, 40, 0, 0, 0);
  canvas.draw_line(h - 30.0, 40, h - 30.0, w - 10.0, 0, 0, 0);
  auto px = [&](double x) { return 40 + (x - xmin) / (xmax - xmin) * (w - 60); };
  auto py = [&](double y) { return (h - 30) - (y - ymin) / (ymax - ymin) * (h - 50); };
  for (std::size_t i = 1; i < points.size(); ++i)
    canvas.draw_line(py(points[i - 1].second), px(points[i - 1].first),
                     py(points[i].second), px(points[i].first), 0.8, 0.2, 0.2);
  write_png(path, canvas.tensor());
}

// Side-by-side panels (degraded | restored | target | residual+0.5), one row
// per sample, separated by 2-px gutters.
inline ImageTensor compose_grid(
    const std::vector<std::array<ImageTensor, 4>>& rows) {
  if (rows.empty()) throw usage_error("compose_grid: no rows");
  const std::size_t hh = rows[0][0].height(), ww = rows[0][0].width();
  constexpr std::size_t gap = 2;
  const std::size_t gh = rows.size() * hh + (rows.size() - 1) * gap;
  const std::size_t gw = 4 * ww + 3 * gap;
  std::vector<double> data(gh * gw, 1.0);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t p = 0; p < 4; ++p) {
      const ImageTensor& img = rows[r][p];
      for (std::size_t y = 0; y < hh; ++y)
        for (std::size_t x = 0; x < ww; ++x)
          data[(r * (hh + gap) + y) * gw + p * (ww + gap) + x] = img.at(0, y, x);
    }
  return ImageTensor(1, gh, gw, std::move(data));
}

}  // namespace rcot::io
