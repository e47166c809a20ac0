#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "autocalib/errors.hpp"
#include "autocalib/types.hpp"

namespace autocalib {

/// Row-major grayscale frame with intensities in [0, 1] and an optional
/// per-pixel foreground mask of the same dimensions.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<float> samples;       // width * height
  std::vector<uint8_t> mask;        // empty, or width * height (0 = excluded)

  RasterImage() = default;
  RasterImage(int w, int h) : width(w), height(h), samples(static_cast<size_t>(w) * h, 0.f) {
    if (w < 16 || h < 16) throw Error("raster image must be at least 16x16");
  }

  float at(int x, int y) const { return samples[static_cast<size_t>(y) * width + x]; }
  float& at(int x, int y) { return samples[static_cast<size_t>(y) * width + x]; }
  bool masked_in(int x, int y) const {
    return mask.empty() || mask[static_cast<size_t>(y) * width + x] != 0;
  }
  ImageSize size() const { return {width, height}; }

  void validate() const {
    if (width < 16 || height < 16) throw Error("raster image must be at least 16x16");
    if (samples.size() != static_cast<size_t>(width) * height) throw Error("sample count mismatch");
    if (!mask.empty() && mask.size() != samples.size()) throw Error("mask size mismatch");
  }
};

/// Per-pixel gradient components and magnitude.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<float> gx, gy, magnitude;

  float mag(int x, int y) const { return magnitude[static_cast<size_t>(y) * width + x]; }
  Vec2 grad(int x, int y) const {
    const size_t i = static_cast<size_t>(y) * width + x;
    return {gx[i], gy[i]};
  }
};

/// Central differences in the interior, one-sided at the borders.
inline GradientField gradient_field(const RasterImage& img) {
  img.validate();
  GradientField g;
  g.width = img.width;
  g.height = img.height;
  const size_t n = static_cast<size_t>(img.width) * img.height;
  g.gx.resize(n);
  g.gy.resize(n);
  g.magnitude.resize(n);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int xm = x > 0 ? x - 1 : x;
      const int xp = x < img.width - 1 ? x + 1 : x;
      const int ym = y > 0 ? y - 1 : y;
      const int yp = y < img.height - 1 ? y + 1 : y;
      const float dx = (img.at(xp, y) - img.at(xm, y)) / static_cast<float>(xp - xm);
      const float dy = (img.at(x, yp) - img.at(x, ym)) / static_cast<float>(yp - ym);
      const size_t i = static_cast<size_t>(y) * img.width + x;
      g.gx[i] = dx;
      g.gy[i] = dy;
      g.magnitude[i] = std::sqrt(dx * dx + dy * dy);
    }
  }
  return g;
}

/// Paints an anti-aliased segment: every pixel within `width` of the segment
/// gets intensity scaled by a linear falloff, combined with max() so crossing
/// strokes do not saturate past the stroke intensity.
inline void draw_segment_aa(RasterImage& img, const Vec2& a, const Vec2& b, float intensity,
                            double width = 1.2) {
  const double pad = width + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - pad)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + pad)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - pad)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + pad)));
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Vec2 p{static_cast<double>(x), static_cast<double>(y)};
      double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double dist = (p - (a + t * ab)).norm();
      const double cover = std::clamp(1.0 - (dist - (width - 1.0)), 0.0, 1.0);
      if (cover > 0.0) {
        float& px = img.at(x, y);
        px = std::max(px, static_cast<float>(intensity * cover));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Frame ingestion: PGM (P2/P5), PPM (P6, converted by luminance), and a raw
// planar grayscale format with the text header "ACGRAY 1\n<w> <h>\n" followed
// by w*h little-endian float32 samples in [0, 1].
// ---------------------------------------------------------------------------

namespace detail {

inline int pnm_next_int(std::istream& is) {
  // Skips whitespace and '#' comments.
  while (true) {
    const int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  int v = 0;
  if (!(is >> v)) throw SchemaError("malformed PNM header");
  return v;
}

}  // namespace detail

inline RasterImage read_pnm(std::istream& is) {
  std::string magic;
  is >> magic;
  if (magic == "ACGRAY") {
    int version = detail::pnm_next_int(is);
    if (version != 1) throw SchemaError("unsupported ACGRAY version");
    const int w = detail::pnm_next_int(is);
    const int h = detail::pnm_next_int(is);
    is.get();  // single separator
    RasterImage img(w, h);
    is.read(reinterpret_cast<char*>(img.samples.data()),
            static_cast<std::streamsize>(img.samples.size() * sizeof(float)));
    if (!is) throw SchemaError("truncated ACGRAY payload");
    return img;
  }
  if (magic != "P2" && magic != "P5" && magic != "P6") throw SchemaError("unsupported image magic: " + magic);
  const int w = detail::pnm_next_int(is);
  const int h = detail::pnm_next_int(is);
  const int maxval = detail::pnm_next_int(is);
  if (maxval <= 0 || maxval > 65535) throw SchemaError("bad PNM maxval");
  RasterImage img(w, h);
  const size_t n = img.samples.size();
  if (magic == "P2") {
    for (size_t i = 0; i < n; ++i) img.samples[i] = static_cast<float>(detail::pnm_next_int(is)) / maxval;
    return img;
  }
  is.get();  // single whitespace after maxval
  const int channels = magic == "P6" ? 3 : 1;
  const int bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> row(n * channels * bytes_per);
  is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
  if (!is) throw SchemaError("truncated PNM payload");
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    if (channels == 3) {
      double rgb[3];
      for (int c = 0; c < 3; ++c) {
        const size_t o = (i * 3 + c) * bytes_per;
        rgb[c] = bytes_per == 2 ? (row[o] << 8 | row[o + 1]) : row[o];
      }
      acc = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
    } else {
      const size_t o = i * bytes_per;
      acc = bytes_per == 2 ? (row[o] << 8 | row[o + 1]) : row[o];
    }
    img.samples[i] = static_cast<float>(acc / maxval);
  }
  return img;
}

inline void write_pgm(std::ostream& os, const RasterImage& img) {
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  for (float v : img.samples) {
    const int g = std::clamp(static_cast<int>(std::lround(v * 255.f)), 0, 255);
    os.put(static_cast<char>(g));
  }
}

/// Reads a PGM as a boolean mask (nonzero = included).
inline std::vector<uint8_t> read_mask_pgm(std::istream& is, int width, int height) {
  const RasterImage m = read_pnm(is);
  if (m.width != width || m.height != height) throw SchemaError("mask dimensions mismatch");
  std::vector<uint8_t> mask(m.samples.size());
  for (size_t i = 0; i < mask.size(); ++i) mask[i] = m.samples[i] > 0.f ? 1 : 0;
  return mask;
}

}  // namespace autocalib
