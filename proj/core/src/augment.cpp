#include "clotkit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "clotkit/errors.hpp"
#include "clotkit/preprocess.hpp"

namespace clotkit {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

/// reflect-101 index fold: ...3 2 1 | 0 1 2 3 | 2 1 0...
int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

void sample_bilinear(const RasterImage& src, double sx, double sy, std::uint8_t* out) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0;
  const double fy = sy - y0;
  const int xa = reflect101(x0, src.width);
  const int xb = reflect101(x0 + 1, src.width);
  const int ya = reflect101(y0, src.height);
  const int yb = reflect101(y0 + 1, src.height);
  const std::uint8_t* p00 = src.pixel(xa, ya);
  const std::uint8_t* p01 = src.pixel(xb, ya);
  const std::uint8_t* p10 = src.pixel(xa, yb);
  const std::uint8_t* p11 = src.pixel(xb, yb);
  for (int c = 0; c < 3; ++c) {
    const double top = p00[c] + (p01[c] - p00[c]) * fx;
    const double bot = p10[c] + (p11[c] - p10[c]) * fx;
    out[c] = clamp_u8(top + (bot - top) * fy);
  }
}

/// Runs an inverse mapping (output pixel -> source position) over the image.
template <typename MapFn>
RasterImage remap(const RasterImage& src, int out_w, int out_h, MapFn&& map) {
  RasterImage out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    std::uint8_t* dst = out.pixel(0, y);
    for (int x = 0; x < out_w; ++x) {
      auto [sx, sy] = map(x, y);
      sample_bilinear(src, sx, sy, dst + 3 * x);
    }
  }
  return out;
}

double luma(const std::uint8_t* p) {
  return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
}

// ---------------------------------------------------------------------------
// Parameter registry
// ---------------------------------------------------------------------------

struct ParamDef {
  const char* name;
  double def;
  double min;
  double max;
};

std::vector<ParamDef> param_defs(TransformKind kind) {
  switch (kind) {
    case TransformKind::ToGray:
    case TransformKind::Transpose:
    case TransformKind::VerticalFlip:
    case TransformKind::HorizontalFlip:
      return {};
    case TransformKind::RandomBrightness:
      return {{"limit", 0.2, 0.0, 1.0}};
    case TransformKind::RandomContrast:
      return {{"limit", 0.2, 0.0, 0.999}};
    case TransformKind::MotionBlur:
    case TransformKind::MedianBlur:
    case TransformKind::GaussianBlur:
      return {{"kernel_max", 7, 3, 99}};
    case TransformKind::GaussNoise:
      return {{"var_min", 10.0, 0.0, 65025.0}, {"var_max", 50.0, 0.0, 65025.0}};
    case TransformKind::OpticalDistortion:
      return {{"distort_limit", 0.05, 0.0, 2.0}, {"shift_limit", 0.05, 0.0, 1.0}};
    case TransformKind::GridDistortion:
      return {{"num_steps", 5, 1, 100}, {"distort_limit", 0.3, 0.0, 0.999}};
    case TransformKind::ElasticTransform:
      return {{"alpha", 1.0, 0.0, 1e4}, {"sigma", 50.0, 0.01, 1e4}};
    case TransformKind::Clahe:
      return {{"clip_limit", 4.0, 1.0, 1000.0}, {"tiles", 8, 1, 64}};
    case TransformKind::HueSaturationValue:
      return {{"hue_shift_limit", 20, 0, 180},
              {"sat_shift_limit", 30, 0, 255},
              {"val_shift_limit", 20, 0, 255}};
    case TransformKind::ShiftScaleRotate:
      return {{"shift_limit", 0.0625, 0.0, 1.0},
              {"scale_limit", 0.1, 0.0, 0.999},
              {"rotate_limit", 45, 0, 360}};
    case TransformKind::RandomResizedCrop:
      return {{"height", 0, 0, 1 << 20},       {"width", 0, 0, 1 << 20},
              {"scale_min", 0.08, 1e-6, 1.0},  {"scale_max", 1.0, 1e-6, 1.0},
              {"ratio_min", 0.75, 1e-6, 1e6},  {"ratio_max", 4.0 / 3.0, 1e-6, 1e6}};
    case TransformKind::Cutout:
      return {{"num_holes", 8, 0, 4096},
              {"hole_height", 8, 1, 1 << 20},
              {"hole_width", 8, 1, 1 << 20},
              {"base_side", 224, 0, 1 << 20},
              {"fill", 0, 0, 255}};
  }
  return {};
}

int odd_kernel(double kernel_max) {
  const int k = static_cast<int>(kernel_max);
  if (k < 3 || k % 2 == 0) raise(Errc::InvalidParams, "kernel_max must be odd and >= 3");
  return k;
}

// ---------------------------------------------------------------------------
// Point operations
// ---------------------------------------------------------------------------

RasterImage to_gray(const RasterImage& img) {
  RasterImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); i += 3) {
    const std::uint8_t y = clamp_u8(luma(img.data.data() + i));
    out.data[i] = out.data[i + 1] = out.data[i + 2] = y;
  }
  return out;
}

RasterImage flip_horizontal(const RasterImage& img) {
  RasterImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::memcpy(out.pixel(img.width - 1 - x, y), img.pixel(x, y), 3);
    }
  }
  return out;
}

RasterImage flip_vertical(const RasterImage& img) {
  RasterImage out(img.width, img.height);
  const std::size_t row = static_cast<std::size_t>(img.width) * 3;
  for (int y = 0; y < img.height; ++y) {
    std::memcpy(out.pixel(0, img.height - 1 - y), img.pixel(0, y), row);
  }
  return out;
}

RasterImage brightness(const RasterImage& img, double delta) {
  RasterImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = clamp_u8(img.data[i] + delta);
  }
  return out;
}

RasterImage contrast(const RasterImage& img, double alpha) {
  double pivot = 0.0;
  for (std::size_t i = 0; i < img.data.size(); i += 3) {
    pivot += luma(img.data.data() + i);
  }
  pivot /= static_cast<double>(img.data.size() / 3);

  RasterImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = clamp_u8(pivot + (img.data[i] - pivot) * alpha);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Blurs and noise
// ---------------------------------------------------------------------------

RasterImage convolve2d(const RasterImage& img, const std::vector<double>& kernel, int k) {
  const int r = k / 2;
  RasterImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int ky = 0; ky < k; ++ky) {
        const int sy = reflect101(y + ky - r, img.height);
        for (int kx = 0; kx < k; ++kx) {
          const double w = kernel[ky * k + kx];
          if (w == 0.0) continue;
          const std::uint8_t* p = img.pixel(reflect101(x + kx - r, img.width), sy);
          acc[0] += w * p[0];
          acc[1] += w * p[1];
          acc[2] += w * p[2];
        }
      }
      std::uint8_t* d = out.pixel(x, y);
      d[0] = clamp_u8(acc[0]);
      d[1] = clamp_u8(acc[1]);
      d[2] = clamp_u8(acc[2]);
    }
  }
  return out;
}

RasterImage motion_blur(const RasterImage& img, int k, double angle) {
  std::vector<double> kernel(static_cast<std::size_t>(k) * k, 0.0);
  const int c = k / 2;
  // Line through the kernel center; Bresenham between the two endpoints.
  int x0 = static_cast<int>(std::lround(c - std::cos(angle) * c));
  int y0 = static_cast<int>(std::lround(c - std::sin(angle) * c));
  int x1 = static_cast<int>(std::lround(c + std::cos(angle) * c));
  int y1 = static_cast<int>(std::lround(c + std::sin(angle) * c));
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  int count = 0;
  while (true) {
    kernel[y0 * k + x0] = 1.0;
    ++count;
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) { err += dy; x0 += sx; }
    if (e2 <= dx) { err += dx; y0 += sy; }
  }
  for (double& w : kernel) w /= count;
  return convolve2d(img, kernel, k);
}

RasterImage median_blur(const RasterImage& img, int k) {
  const int r = k / 2;
  RasterImage out(img.width, img.height);
  std::vector<std::uint8_t> window(static_cast<std::size_t>(k) * k);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::uint8_t* d = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        int n = 0;
        for (int ky = -r; ky <= r; ++ky) {
          const int sy = reflect101(y + ky, img.height);
          for (int kx = -r; kx <= r; ++kx) {
            window[n++] = img.at(reflect101(x + kx, img.width), sy, c);
          }
        }
        auto mid = window.begin() + n / 2;
        std::nth_element(window.begin(), mid, window.begin() + n);
        d[c] = *mid;
      }
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(int radius, double sigma) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

RasterImage gaussian_blur(const RasterImage& img, int k) {
  // OpenCV's sigma-from-kernel rule.
  const double sigma = 0.3 * ((k - 1) * 0.5 - 1.0) + 0.8;
  const int r = k / 2;
  const auto kern = gaussian_kernel(r, sigma);

  // Separable: horizontal into a float buffer, then vertical.
  std::vector<double> tmp(img.data.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -r; i <= r; ++i) {
        const std::uint8_t* p = img.pixel(reflect101(x + i, img.width), y);
        const double w = kern[i + r];
        acc[0] += w * p[0];
        acc[1] += w * p[1];
        acc[2] += w * p[2];
      }
      double* t = tmp.data() + (static_cast<std::size_t>(y) * img.width + x) * 3;
      t[0] = acc[0];
      t[1] = acc[1];
      t[2] = acc[2];
    }
  }
  RasterImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -r; i <= r; ++i) {
        const double* t =
            tmp.data() + (static_cast<std::size_t>(reflect101(y + i, img.height)) * img.width + x) * 3;
        const double w = kern[i + r];
        acc[0] += w * t[0];
        acc[1] += w * t[1];
        acc[2] += w * t[2];
      }
      std::uint8_t* d = out.pixel(x, y);
      d[0] = clamp_u8(acc[0]);
      d[1] = clamp_u8(acc[1]);
      d[2] = clamp_u8(acc[2]);
    }
  }
  return out;
}

RasterImage gauss_noise(const RasterImage& img, double sigma, CounterRng& rng) {
  RasterImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = clamp_u8(img.data[i] + sigma * rng.normal());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Geometric warps
// ---------------------------------------------------------------------------

RasterImage optical_distortion(const RasterImage& img, double k, double dx, double dy) {
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  const double radius = std::max(img.width, img.height) / 2.0;
  return remap(img, img.width, img.height, [&](int x, int y) {
    const double ux = (x - cx) / radius;
    const double uy = (y - cy) / radius;
    const double r2 = ux * ux + uy * uy;
    const double scale = 1.0 + k * r2;
    return std::pair{cx + (x - cx) * scale + dx, cy + (y - cy) * scale + dy};
  });
}

/// Monotone piecewise-linear axis map with jittered knots; identity at zero
/// jitter. Dest knots are uniform, source knots are the jittered cumulative
/// cell widths renormalized to span the full axis.
struct AxisMap {
  std::vector<double> dst;   // n+1 uniform knots
  std::vector<double> src;   // n+1 jittered knots, src.front()=0, src.back()=len
  double cell;

  static AxisMap build(int len, const std::vector<double>& factors) {
    const int n = static_cast<int>(factors.size());
    AxisMap m;
    m.cell = static_cast<double>(len) / n;
    m.dst.resize(n + 1);
    m.src.resize(n + 1);
    for (int i = 0; i <= n; ++i) m.dst[i] = m.cell * i;
    m.src[0] = 0.0;
    for (int i = 0; i < n; ++i) m.src[i + 1] = m.src[i] + m.cell * factors[i];
    const double scale = static_cast<double>(len) / m.src.back();
    for (double& s : m.src) s *= scale;
    return m;
  }

  double operator()(double x) const {
    const int n = static_cast<int>(dst.size()) - 1;
    int i = std::min(static_cast<int>(x / cell), n - 1);
    const double slope = (src[i + 1] - src[i]) / (dst[i + 1] - dst[i]);
    return src[i] + (x - dst[i]) * slope;
  }
};

RasterImage grid_distortion(const RasterImage& img, const std::vector<double>& fx,
                            const std::vector<double>& fy) {
  const AxisMap mx = AxisMap::build(img.width, fx);
  const AxisMap my = AxisMap::build(img.height, fy);
  return remap(img, img.width, img.height,
               [&](int x, int y) { return std::pair{mx(x), my(y)}; });
}

void smooth_field(std::vector<double>& field, int w, int h, double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  const auto kern = gaussian_kernel(r, sigma);
  std::vector<double> tmp(field.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += kern[i + r] * field[static_cast<std::size_t>(y) * w + reflect101(x + i, w)];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += kern[i + r] * tmp[static_cast<std::size_t>(reflect101(y + i, h)) * w + x];
      }
      field[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
}

RasterImage elastic_transform(const RasterImage& img, double alpha, double sigma,
                              CounterRng& rng) {
  const int w = img.width, h = img.height;
  std::vector<double> dx(static_cast<std::size_t>(w) * h);
  std::vector<double> dy(dx.size());
  for (double& v : dx) v = rng.uniform(-1.0, 1.0);
  for (double& v : dy) v = rng.uniform(-1.0, 1.0);
  if (alpha != 0.0) {
    smooth_field(dx, w, h, sigma);
    smooth_field(dy, w, h, sigma);
  }
  return remap(img, w, h, [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    return std::pair{x + alpha * dx[i], y + alpha * dy[i]};
  });
}

RasterImage shift_scale_rotate(const RasterImage& img, double angle_deg, double scale,
                               double shift_x, double shift_y) {
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  const double theta = angle_deg * kPi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double tx = shift_x * img.width;
  const double ty = shift_y * img.height;
  // Inverse of translate(t) * rotate(theta) * scale(s) about the center.
  return remap(img, img.width, img.height, [&](int x, int y) {
    const double px = x - cx - tx;
    const double py = y - cy - ty;
    const double rx = (cos_t * px + sin_t * py) / scale;
    const double ry = (-sin_t * px + cos_t * py) / scale;
    return std::pair{cx + rx, cy + ry};
  });
}

// ---------------------------------------------------------------------------
// CLAHE
// ---------------------------------------------------------------------------
//
// Per-channel adaptive histogram equalization over a tiles x tiles grid.
// Tile boundaries at floor(i*dim/tiles). Histogram clipped at
// max(1, clip_limit*area/256); the excess is redistributed as floor(e/256)
// to every bin plus one to each of the first e%256 bins. Mapping
// lut[v] = round(cdf[v]*255/area). Pixels blend the LUTs of the four
// surrounding tile centers bilinearly, clamped at the border tiles.

struct ClaheGrid {
  int tiles;
  std::vector<int> x0, x1, y0, y1;     // tile pixel ranges [x0, x1)
  std::vector<double> cx, cy;          // tile centers

  ClaheGrid(int w, int h, int t) : tiles(t), x0(t), x1(t), y0(t), y1(t), cx(t), cy(t) {
    for (int i = 0; i < t; ++i) {
      x0[i] = static_cast<int>(static_cast<std::int64_t>(i) * w / t);
      x1[i] = static_cast<int>(static_cast<std::int64_t>(i + 1) * w / t);
      y0[i] = static_cast<int>(static_cast<std::int64_t>(i) * h / t);
      y1[i] = static_cast<int>(static_cast<std::int64_t>(i + 1) * h / t);
      cx[i] = x0[i] + (x1[i] - x0[i] - 1) / 2.0;
      cy[i] = y0[i] + (y1[i] - y0[i] - 1) / 2.0;
    }
  }
};

void clahe_lut(const RasterImage& img, const ClaheGrid& g, int ti, int tj, int channel,
               double clip_limit, std::array<double, 256>& lut) {
  int hist[256] = {};
  const std::int64_t area =
      static_cast<std::int64_t>(g.x1[ti] - g.x0[ti]) * (g.y1[tj] - g.y0[tj]);
  for (int y = g.y0[tj]; y < g.y1[tj]; ++y) {
    for (int x = g.x0[ti]; x < g.x1[ti]; ++x) {
      ++hist[img.at(x, y, channel)];
    }
  }
  const int limit = std::max(1, static_cast<int>(clip_limit * area / 256.0));
  std::int64_t excess = 0;
  for (int v = 0; v < 256; ++v) {
    if (hist[v] > limit) {
      excess += hist[v] - limit;
      hist[v] = limit;
    }
  }
  const int bonus = static_cast<int>(excess / 256);
  const int residual = static_cast<int>(excess % 256);
  for (int v = 0; v < 256; ++v) hist[v] += bonus;
  for (int v = 0; v < residual; ++v) ++hist[v];

  std::int64_t cdf = 0;
  for (int v = 0; v < 256; ++v) {
    cdf += hist[v];
    lut[v] = static_cast<double>(cdf) * 255.0 / static_cast<double>(area);
  }
}

RasterImage clahe(const RasterImage& img, double clip_limit, int tiles) {
  tiles = std::min({tiles, img.width, img.height});
  const ClaheGrid g(img.width, img.height, tiles);
  RasterImage out(img.width, img.height);

  std::vector<std::array<double, 256>> luts(static_cast<std::size_t>(tiles) * tiles);
  for (int channel = 0; channel < 3; ++channel) {
    for (int tj = 0; tj < tiles; ++tj) {
      for (int ti = 0; ti < tiles; ++ti) {
        clahe_lut(img, g, ti, tj, channel, clip_limit, luts[tj * tiles + ti]);
      }
    }
    for (int y = 0; y < img.height; ++y) {
      // Vertical tile pair and weight for this row.
      int j0 = tiles - 1;
      while (j0 > 0 && g.cy[j0] > y) --j0;
      const int j1 = std::min(j0 + 1, tiles - 1);
      double wy = 0.0;
      if (j1 != j0 && y >= g.cy[j0]) wy = (y - g.cy[j0]) / (g.cy[j1] - g.cy[j0]);
      if (y < g.cy[0]) { j0 = 0; wy = 0.0; }

      for (int x = 0; x < img.width; ++x) {
        int i0 = tiles - 1;
        while (i0 > 0 && g.cx[i0] > x) --i0;
        const int i1 = std::min(i0 + 1, tiles - 1);
        double wx = 0.0;
        if (i1 != i0 && x >= g.cx[i0]) wx = (x - g.cx[i0]) / (g.cx[i1] - g.cx[i0]);
        if (x < g.cx[0]) { i0 = 0; wx = 0.0; }

        const std::uint8_t v = img.at(x, y, channel);
        const double top = luts[j0 * tiles + i0][v] * (1.0 - wx) + luts[j0 * tiles + i1][v] * wx;
        const double bot = luts[j1 * tiles + i0][v] * (1.0 - wx) + luts[j1 * tiles + i1][v] * wx;
        out.at(x, y, channel) = clamp_u8(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// HSV
// ---------------------------------------------------------------------------

void rgb_to_hsv(const std::uint8_t* p, double& h, double& s, double& v) {
  const double r = p[0], g = p[1], b = p[2];
  v = std::max({r, g, b});
  const double c = v - std::min({r, g, b});
  s = v == 0.0 ? 0.0 : 255.0 * c / v;
  if (c == 0.0) {
    h = 0.0;
  } else if (v == r) {
    h = 60.0 * (g - b) / c;
  } else if (v == g) {
    h = 60.0 * (b - r) / c + 120.0;
  } else {
    h = 60.0 * (r - g) / c + 240.0;
  }
  if (h < 0.0) h += 360.0;
  h /= 2.0;  // 8-bit convention: hue in [0, 180)
}

void hsv_to_rgb(double h, double s, double v, std::uint8_t* p) {
  const double hue = h * 2.0;  // back to degrees
  const double c = v * s / 255.0;
  const double hp = hue / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  p[0] = clamp_u8(r + m);
  p[1] = clamp_u8(g + m);
  p[2] = clamp_u8(b + m);
}

RasterImage hue_saturation_value(const RasterImage& img, double dh, double ds, double dv) {
  RasterImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); i += 3) {
    double h, s, v;
    rgb_to_hsv(img.data.data() + i, h, s, v);
    h = std::fmod(h + dh + 360.0, 180.0);
    s = std::clamp(s + ds, 0.0, 255.0);
    v = std::clamp(v + dv, 0.0, 255.0);
    hsv_to_rgb(h, s, v, out.data.data() + i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Crop-style transforms
// ---------------------------------------------------------------------------

RasterImage crop(const RasterImage& img, int x0, int y0, int w, int h) {
  RasterImage out(w, h);
  for (int y = 0; y < h; ++y) {
    std::memcpy(out.pixel(0, y), img.pixel(x0, y0 + y), static_cast<std::size_t>(w) * 3);
  }
  return out;
}

RasterImage random_resized_crop(const RasterImage& img, const std::map<std::string, double>& p,
                                CounterRng& rng) {
  const int out_w = p.at("width") > 0 ? static_cast<int>(p.at("width")) : img.width;
  const int out_h = p.at("height") > 0 ? static_cast<int>(p.at("height")) : img.height;
  const double scale_min = p.at("scale_min");
  const double scale_max = p.at("scale_max");
  const double ratio_min = p.at("ratio_min");
  const double ratio_max = p.at("ratio_max");
  if (scale_min > scale_max || ratio_min > ratio_max) {
    raise(Errc::InvalidParams, "scale/ratio ranges inverted");
  }

  const double area = static_cast<double>(img.width) * img.height;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target_area = area * rng.uniform(scale_min, scale_max);
    const double aspect = std::exp(rng.uniform(std::log(ratio_min), std::log(ratio_max)));
    const int w = static_cast<int>(std::lround(std::sqrt(target_area * aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target_area / aspect)));
    if (w > 0 && w <= img.width && h > 0 && h <= img.height) {
      const int x0 = static_cast<int>(rng.next_below(img.width - w + 1));
      const int y0 = static_cast<int>(rng.next_below(img.height - h + 1));
      return resize(crop(img, x0, y0, w, h), out_w, out_h);
    }
  }
  // Fallback: largest centered crop with the aspect clamped into range.
  const double in_ratio = static_cast<double>(img.width) / img.height;
  int w = img.width, h = img.height;
  if (in_ratio < ratio_min) {
    h = static_cast<int>(std::lround(img.width / ratio_min));
  } else if (in_ratio > ratio_max) {
    w = static_cast<int>(std::lround(img.height * ratio_max));
  }
  return resize(crop(img, (img.width - w) / 2, (img.height - h) / 2, w, h), out_w, out_h);
}

RasterImage cutout(const RasterImage& img, const std::map<std::string, double>& p,
                   CounterRng& rng) {
  RasterImage out = img;
  const int holes = static_cast<int>(p.at("num_holes"));
  const double base = p.at("base_side");
  const double scale = base > 0 ? std::min(img.width, img.height) / base : 1.0;
  const int hw = std::min(img.width, std::max(1, static_cast<int>(std::lround(p.at("hole_width") * scale))));
  const int hh = std::min(img.height, std::max(1, static_cast<int>(std::lround(p.at("hole_height") * scale))));
  const std::uint8_t fill = static_cast<std::uint8_t>(p.at("fill"));
  for (int hole = 0; hole < holes; ++hole) {
    const int x0 = static_cast<int>(rng.next_below(img.width - hw + 1));
    const int y0 = static_cast<int>(rng.next_below(img.height - hh + 1));
    for (int y = y0; y < y0 + hh; ++y) {
      std::memset(out.pixel(x0, y), fill, static_cast<std::size_t>(hw) * 3);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface
// ---------------------------------------------------------------------------

TransformKind parse_transform_kind(std::string_view name) {
  static const std::pair<std::string_view, TransformKind> table[] = {
      {"ToGray", TransformKind::ToGray},
      {"Transpose", TransformKind::Transpose},
      {"VerticalFlip", TransformKind::VerticalFlip},
      {"HorizontalFlip", TransformKind::HorizontalFlip},
      {"RandomBrightness", TransformKind::RandomBrightness},
      {"RandomContrast", TransformKind::RandomContrast},
      {"MotionBlur", TransformKind::MotionBlur},
      {"MedianBlur", TransformKind::MedianBlur},
      {"GaussianBlur", TransformKind::GaussianBlur},
      {"GaussNoise", TransformKind::GaussNoise},
      {"OpticalDistortion", TransformKind::OpticalDistortion},
      {"GridDistortion", TransformKind::GridDistortion},
      {"ElasticTransform", TransformKind::ElasticTransform},
      {"CLAHE", TransformKind::Clahe},
      {"HueSaturationValue", TransformKind::HueSaturationValue},
      {"ShiftScaleRotate", TransformKind::ShiftScaleRotate},
      {"RandomResizedCrop", TransformKind::RandomResizedCrop},
      {"Cutout", TransformKind::Cutout},
  };
  for (const auto& [key, kind] : table) {
    if (key == name) return kind;
  }
  raise(Errc::InvalidParams, "unknown transform '" + std::string(name) + "'");
}

std::string_view transform_kind_name(TransformKind kind) noexcept {
  switch (kind) {
    case TransformKind::ToGray: return "ToGray";
    case TransformKind::Transpose: return "Transpose";
    case TransformKind::VerticalFlip: return "VerticalFlip";
    case TransformKind::HorizontalFlip: return "HorizontalFlip";
    case TransformKind::RandomBrightness: return "RandomBrightness";
    case TransformKind::RandomContrast: return "RandomContrast";
    case TransformKind::MotionBlur: return "MotionBlur";
    case TransformKind::MedianBlur: return "MedianBlur";
    case TransformKind::GaussianBlur: return "GaussianBlur";
    case TransformKind::GaussNoise: return "GaussNoise";
    case TransformKind::OpticalDistortion: return "OpticalDistortion";
    case TransformKind::GridDistortion: return "GridDistortion";
    case TransformKind::ElasticTransform: return "ElasticTransform";
    case TransformKind::Clahe: return "CLAHE";
    case TransformKind::HueSaturationValue: return "HueSaturationValue";
    case TransformKind::ShiftScaleRotate: return "ShiftScaleRotate";
    case TransformKind::RandomResizedCrop: return "RandomResizedCrop";
    case TransformKind::Cutout: return "Cutout";
  }
  return "?";
}

std::map<std::string, double> resolved_params(const TransformSpec& spec) {
  const auto defs = param_defs(spec.kind);
  std::map<std::string, double> out;
  for (const auto& def : defs) out[def.name] = def.def;
  for (const auto& [name, value] : spec.params) {
    auto it = std::find_if(defs.begin(), defs.end(),
                           [&](const ParamDef& d) { return name == d.name; });
    if (it == defs.end()) {
      raise(Errc::InvalidParams, std::string(transform_kind_name(spec.kind)) +
                                     " has no parameter '" + name + "'");
    }
    if (!(value >= it->min && value <= it->max)) {
      raise(Errc::InvalidParams, std::string(transform_kind_name(spec.kind)) + "." + name +
                                     "=" + std::to_string(value) + " outside [" +
                                     std::to_string(it->min) + ", " + std::to_string(it->max) + "]");
    }
    out[name] = value;
  }
  return out;
}

RasterImage apply_transform(const TransformSpec& spec, const RasterImage& img,
                            CounterRng& rng) {
  if (!img.valid()) raise(Errc::InvalidParams, "invalid raster");
  if (!(spec.probability >= 0.0 && spec.probability <= 1.0)) {
    raise(Errc::InvalidParams, "probability outside [0, 1]");
  }
  const auto p = resolved_params(spec);

  switch (spec.kind) {
    case TransformKind::ToGray:
      return to_gray(img);
    case TransformKind::Transpose:
      return transpose(img);
    case TransformKind::VerticalFlip:
      return flip_vertical(img);
    case TransformKind::HorizontalFlip:
      return flip_horizontal(img);
    case TransformKind::RandomBrightness:
      return brightness(img, rng.uniform(-p.at("limit"), p.at("limit")) * 255.0);
    case TransformKind::RandomContrast:
      return contrast(img, 1.0 + rng.uniform(-p.at("limit"), p.at("limit")));
    case TransformKind::MotionBlur: {
      const int kmax = odd_kernel(p.at("kernel_max"));
      const int k = 3 + 2 * static_cast<int>(rng.next_below((kmax - 3) / 2 + 1));
      const double angle = rng.uniform(0.0, kPi);
      return motion_blur(img, k, angle);
    }
    case TransformKind::MedianBlur: {
      const int kmax = odd_kernel(p.at("kernel_max"));
      const int k = 3 + 2 * static_cast<int>(rng.next_below((kmax - 3) / 2 + 1));
      return median_blur(img, k);
    }
    case TransformKind::GaussianBlur: {
      const int kmax = odd_kernel(p.at("kernel_max"));
      const int k = 3 + 2 * static_cast<int>(rng.next_below((kmax - 3) / 2 + 1));
      return gaussian_blur(img, k);
    }
    case TransformKind::GaussNoise: {
      if (p.at("var_min") > p.at("var_max")) raise(Errc::InvalidParams, "var range inverted");
      const double var = rng.uniform(p.at("var_min"), p.at("var_max"));
      return gauss_noise(img, std::sqrt(var), rng);
    }
    case TransformKind::OpticalDistortion: {
      const double k = rng.uniform(-p.at("distort_limit"), p.at("distort_limit"));
      const double dx = rng.uniform(-p.at("shift_limit"), p.at("shift_limit")) * img.width;
      const double dy = rng.uniform(-p.at("shift_limit"), p.at("shift_limit")) * img.height;
      return optical_distortion(img, k, dx, dy);
    }
    case TransformKind::GridDistortion: {
      const int n = static_cast<int>(p.at("num_steps"));
      const double limit = p.at("distort_limit");
      std::vector<double> fx(n), fy(n);
      for (double& f : fx) f = 1.0 + rng.uniform(-limit, limit);
      for (double& f : fy) f = 1.0 + rng.uniform(-limit, limit);
      return grid_distortion(img, fx, fy);
    }
    case TransformKind::ElasticTransform:
      return elastic_transform(img, p.at("alpha"), p.at("sigma"), rng);
    case TransformKind::Clahe:
      return clahe(img, p.at("clip_limit"), static_cast<int>(p.at("tiles")));
    case TransformKind::HueSaturationValue: {
      const double dh = rng.uniform(-p.at("hue_shift_limit"), p.at("hue_shift_limit"));
      const double ds = rng.uniform(-p.at("sat_shift_limit"), p.at("sat_shift_limit"));
      const double dv = rng.uniform(-p.at("val_shift_limit"), p.at("val_shift_limit"));
      return hue_saturation_value(img, dh, ds, dv);
    }
    case TransformKind::ShiftScaleRotate: {
      const double angle = rng.uniform(-p.at("rotate_limit"), p.at("rotate_limit"));
      const double scale = 1.0 + rng.uniform(-p.at("scale_limit"), p.at("scale_limit"));
      const double dx = rng.uniform(-p.at("shift_limit"), p.at("shift_limit"));
      const double dy = rng.uniform(-p.at("shift_limit"), p.at("shift_limit"));
      return shift_scale_rotate(img, angle, scale, dx, dy);
    }
    case TransformKind::RandomResizedCrop:
      return random_resized_crop(img, p, rng);
    case TransformKind::Cutout:
      return cutout(img, p, rng);
  }
  raise(Errc::InvalidParams, "unreachable transform kind");
}

RasterImage compose_pipeline(const AugPipeline& pipeline, const RasterImage& img,
                             std::uint64_t seed) {
  CounterRng rng(seed);
  RasterImage current = img;
  for (const auto& stage : pipeline.stages) {
    if (stage.choices.empty()) raise(Errc::InvalidParams, "empty pipeline stage");
    if (!(stage.probability >= 0.0 && stage.probability <= 1.0)) {
      raise(Errc::InvalidParams, "stage probability outside [0, 1]");
    }
    if (!stage.weights.empty() && stage.weights.size() != stage.choices.size()) {
      raise(Errc::InvalidParams, "OneOf weights must match member count");
    }
    const bool fires = rng.next_double() < stage.probability;
    if (!fires) continue;

    std::size_t pick = 0;
    if (stage.one_of()) {
      if (stage.weights.empty()) {
        pick = rng.next_below(static_cast<std::uint32_t>(stage.choices.size()));
      } else {
        double total = 0.0;
        for (double w : stage.weights) {
          if (!(w >= 0.0)) raise(Errc::InvalidParams, "negative OneOf weight");
          total += w;
        }
        if (total <= 0.0) raise(Errc::InvalidParams, "OneOf weights sum to zero");
        const double u = rng.next_double() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < stage.weights.size(); ++i) {
          acc += stage.weights[i];
          if (u < acc || i + 1 == stage.weights.size()) {
            pick = i;
            break;
          }
        }
      }
    }
    current = apply_transform(stage.choices[pick], current, rng);
  }
  return current;
}

FloatTensor normalize(const RasterImage& img, const NormalizationSpec& spec) {
  for (double s : spec.std) {
    if (!(s > 0.0)) raise(Errc::InvalidParams, "std components must be positive");
  }
  FloatTensor out(3, img.height, img.width);
  for (int c = 0; c < 3; ++c) {
    const double mean = spec.mean[c];
    const double inv_std = 1.0 / spec.std[c];
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        out.at(c, y, x) =
            static_cast<float>((img.at(x, y, c) / 255.0 - mean) * inv_std);
      }
    }
  }
  return out;
}

AugPipeline default_pipeline() {
  AugPipeline p;
  auto single = [&](TransformKind kind) {
    PipelineStage stage;
    stage.choices.push_back({kind, 0.5, {}});
    stage.probability = 0.5;
    p.stages.push_back(std::move(stage));
  };
  auto one_of = [&](std::initializer_list<TransformKind> kinds) {
    PipelineStage stage;
    for (TransformKind kind : kinds) stage.choices.push_back({kind, 0.5, {}});
    stage.probability = 0.5;
    p.stages.push_back(std::move(stage));
  };

  single(TransformKind::ToGray);
  single(TransformKind::Transpose);
  single(TransformKind::VerticalFlip);
  single(TransformKind::HorizontalFlip);
  single(TransformKind::RandomBrightness);
  single(TransformKind::RandomContrast);
  one_of({TransformKind::MotionBlur, TransformKind::MedianBlur, TransformKind::GaussianBlur,
          TransformKind::GaussNoise});
  one_of({TransformKind::OpticalDistortion, TransformKind::GridDistortion,
          TransformKind::ElasticTransform});
  single(TransformKind::Clahe);
  single(TransformKind::HueSaturationValue);
  single(TransformKind::ShiftScaleRotate);
  single(TransformKind::RandomResizedCrop);
  single(TransformKind::Cutout);
  return p;
}

}  // namespace clotkit
