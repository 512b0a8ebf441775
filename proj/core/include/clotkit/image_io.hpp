#pragma once

#include <filesystem>

#include "clotkit/raster.hpp"

namespace clotkit {

enum class ImageFormat { Png, Tiff, Unknown };

/// Sniffs the leading magic bytes; never trusts the file extension.
ImageFormat detect_format(const std::filesystem::path& path);

/// Decodes a PNG or a baseline/tiled/stripped TIFF into an 8-bit RGB raster.
/// TIFF decoding walks tile by tile (or strip by strip), so peak memory is
/// the output raster plus a single tile/strip buffer, which keeps multi-GB
/// slides loadable. 8-bit grayscale and RGBA inputs are converted to RGB;
/// anything else is UnsupportedFormat. Unreadable bytes are CorruptFile.
RasterImage decode_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG with fixed encoder settings, so identical rasters
/// produce identical bytes.
void write_png(const RasterImage& img, const std::filesystem::path& path);

struct TiffWriteOptions {
  int tile_size = 256;   // 0 writes strips instead of tiles
  bool deflate = true;   // zlib compression, else uncompressed
};

/// Writes an 8-bit RGB TIFF, tiled by default. Used to produce fixtures and
/// intermediate slides without a second toolchain.
void write_tiff(const RasterImage& img, const std::filesystem::path& path,
                const TiffWriteOptions& options = {});

}  // namespace clotkit
