#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace clotkit {

/// Decoded 8-bit RGB raster, row-major interleaved (R,G,B per pixel).
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  static constexpr int kChannels = 3;

  RasterImage() = default;
  RasterImage(int w, int h)
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * kChannels) {}

  static RasterImage filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    RasterImage img(w, h);
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
      img.data[i] = r;
      img.data[i + 1] = g;
      img.data[i + 2] = b;
    }
    return img;
  }

  std::uint8_t* pixel(int x, int y) {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * kChannels;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * kChannels;
  }

  std::uint8_t at(int x, int y, int c) const { return pixel(x, y)[c]; }
  std::uint8_t& at(int x, int y, int c) { return pixel(x, y)[c]; }

  std::size_t sample_count() const { return data.size(); }
  std::size_t byte_size() const { return data.size(); }

  bool valid() const {
    return width >= 1 && height >= 1 &&
           data.size() == static_cast<std::size_t>(width) * height * kChannels;
  }

  bool operator==(const RasterImage& other) const {
    return width == other.width && height == other.height && data == other.data;
  }
};

/// Planar float tensor (channel, row, column), the shape fed to a backbone.
struct FloatTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  FloatTensor() = default;
  FloatTensor(int c, int h, int w)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * h * w) {}

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

}  // namespace clotkit
