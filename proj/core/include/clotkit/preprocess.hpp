#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "clotkit/raster.hpp"

namespace clotkit {

struct AugPipeline;

/// What counts as slide background. A pixel is background when
/// min(R,G,B) >= background_threshold; a row or column is empty when at
/// least empty_fraction of its pixels are background.
struct BackgroundPolicy {
  int background_threshold = 240;
  double empty_fraction = 0.995;
};

/// Content bounding box in inclusive pixel coordinates.
struct ContentBounds {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
};

/// Locates the smallest row/column range containing every non-empty row and
/// column. Throws EmptyImage when no row (or no column) has content.
ContentBounds content_bounds(const RasterImage& img, const BackgroundPolicy& policy);

/// Crops away empty border rows/columns. Takes the raster by value so the
/// no-op case moves straight through without copying.
RasterImage prune(RasterImage img, const BackgroundPolicy& policy = {});

/// Main-diagonal mirror: out(x, y) = in(y, x). Swaps the dimensions.
RasterImage transpose(const RasterImage& img);

/// Forces landscape orientation: portrait rasters are transposed, others
/// pass through untouched.
RasterImage orient(RasterImage img);

/// Non-aspect-preserving bilinear resize (half-pixel centers, clamped
/// edges). Same-size calls return the input bit-identically.
RasterImage resize(RasterImage img, int out_width, int out_height);
inline RasterImage resize(RasterImage img, int side) {
  return resize(std::move(img), side, side);
}

struct PreprocessSummary {
  std::string image_id;
  int orig_w = 0, orig_h = 0;
  int crop_w = 0, crop_h = 0;
  std::filesystem::path out_path;
  double wall_ms = 0.0;
};

/// Full single-slide pass: decode, prune, orient, resize, optional seeded
/// augmentation, write PNG. Nothing is written unless every stage succeeds.
/// When `augment` is given the pipeline runs with stream seed
/// mix64(augment_seed) ^ hash_str(image_id), so results do not depend on
/// scheduling order.
PreprocessSummary preprocess_one(const std::filesystem::path& in_path,
                                 const std::filesystem::path& out_path,
                                 const BackgroundPolicy& policy, int side,
                                 const std::string& image_id = "",
                                 const AugPipeline* augment = nullptr,
                                 std::uint64_t augment_seed = 0);

}  // namespace clotkit
