#include "clotkit/image_io.hpp"

#include <png.h>
#include <tiffio.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "clotkit/errors.hpp"

namespace clotkit {

namespace {

// libtiff reports problems through global handlers. Warnings are dropped;
// errors are remembered per thread and turned into CorruptFile after the
// failing call returns.
thread_local std::string g_tiff_error;

void tiff_error_handler(const char*, const char* fmt, va_list args) {
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  g_tiff_error = buf;
}

void tiff_warning_handler(const char*, const char*, va_list) {}

struct TiffHandlerGuard {
  TiffHandlerGuard() {
    TIFFSetErrorHandler(tiff_error_handler);
    TIFFSetWarningHandler(tiff_warning_handler);
    g_tiff_error.clear();
  }
};

struct TiffCloser {
  void operator()(TIFF* tif) const {
    if (tif) TIFFClose(tif);
  }
};
using TiffPtr = std::unique_ptr<TIFF, TiffCloser>;

// Expands a decoded buffer of `samples` channels into the RGB destination.
void blit_samples(const std::uint8_t* src, int samples, std::uint8_t* dst, int pixels) {
  switch (samples) {
    case 1:
      for (int i = 0; i < pixels; ++i) {
        dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
      }
      break;
    case 3:
      std::memcpy(dst, src, static_cast<std::size_t>(pixels) * 3);
      break;
    default:  // 4+: drop the extra samples (alpha)
      for (int i = 0; i < pixels; ++i) {
        dst[3 * i] = src[samples * i];
        dst[3 * i + 1] = src[samples * i + 1];
        dst[3 * i + 2] = src[samples * i + 2];
      }
      break;
  }
}

RasterImage decode_tiff(const std::filesystem::path& path) {
  TiffHandlerGuard guard;
  TiffPtr tif(TIFFOpen(path.string().c_str(), "r"));
  if (!tif) raise(Errc::CorruptFile, "cannot open TIFF " + path.string());

  std::uint32_t width = 0, height = 0;
  std::uint16_t bits = 0, samples = 0, planar = PLANARCONFIG_CONTIG, photometric = 0;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bits);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &samples);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PHOTOMETRIC, &photometric);

  if (width == 0 || height == 0) raise(Errc::CorruptFile, "TIFF with zero dimension");
  if (bits != 8) {
    raise(Errc::UnsupportedFormat, "only 8-bit TIFF supported, got " +
                                       std::to_string(bits) + " bits");
  }
  if (samples != 1 && samples != 3 && samples != 4) {
    raise(Errc::UnsupportedFormat,
          "unsupported samples per pixel: " + std::to_string(samples));
  }
  if (planar != PLANARCONFIG_CONTIG) {
    raise(Errc::UnsupportedFormat, "planar TIFF layout not supported");
  }
  if (photometric != PHOTOMETRIC_RGB && photometric != PHOTOMETRIC_MINISBLACK) {
    raise(Errc::UnsupportedFormat,
          "unsupported photometric interpretation: " + std::to_string(photometric));
  }

  RasterImage img(static_cast<int>(width), static_cast<int>(height));

  if (TIFFIsTiled(tif.get())) {
    std::uint32_t tile_w = 0, tile_h = 0;
    TIFFGetField(tif.get(), TIFFTAG_TILEWIDTH, &tile_w);
    TIFFGetField(tif.get(), TIFFTAG_TILELENGTH, &tile_h);
    if (tile_w == 0 || tile_h == 0) raise(Errc::CorruptFile, "tiled TIFF without tile dims");

    std::vector<std::uint8_t> tile(TIFFTileSize(tif.get()));
    for (std::uint32_t ty = 0; ty < height; ty += tile_h) {
      for (std::uint32_t tx = 0; tx < width; tx += tile_w) {
        if (TIFFReadTile(tif.get(), tile.data(), tx, ty, 0, 0) < 0) {
          raise(Errc::CorruptFile, "tile read failed at (" + std::to_string(tx) + "," +
                                       std::to_string(ty) + "): " + g_tiff_error);
        }
        const std::uint32_t copy_w = std::min(tile_w, width - tx);
        const std::uint32_t copy_h = std::min(tile_h, height - ty);
        for (std::uint32_t row = 0; row < copy_h; ++row) {
          blit_samples(tile.data() + static_cast<std::size_t>(row) * tile_w * samples,
                       samples, img.pixel(static_cast<int>(tx), static_cast<int>(ty + row)),
                       static_cast<int>(copy_w));
        }
      }
    }
  } else {
    const std::uint32_t rows_per_strip = [&] {
      std::uint32_t rps = 0;
      TIFFGetFieldDefaulted(tif.get(), TIFFTAG_ROWSPERSTRIP, &rps);
      return std::min(rps, height);
    }();
    std::vector<std::uint8_t> strip(TIFFStripSize(tif.get()));
    for (std::uint32_t y = 0; y < height; y += rows_per_strip) {
      const tstrip_t strip_index = TIFFComputeStrip(tif.get(), y, 0);
      const tmsize_t n = TIFFReadEncodedStrip(tif.get(), strip_index, strip.data(), -1);
      if (n < 0) {
        raise(Errc::CorruptFile,
              "strip read failed at row " + std::to_string(y) + ": " + g_tiff_error);
      }
      const std::uint32_t rows = std::min(rows_per_strip, height - y);
      for (std::uint32_t row = 0; row < rows; ++row) {
        blit_samples(strip.data() + static_cast<std::size_t>(row) * width * samples,
                     samples, img.pixel(0, static_cast<int>(y + row)),
                     static_cast<int>(width));
      }
    }
  }
  return img;
}

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (file) std::fclose(file);
  }
};

// libpng's default handlers print to stderr; route errors through the
// longjmp recovery silently and swallow warnings.
extern "C" void png_silent_error(png_structp png, png_const_charp) {
  png_longjmp(png, 1);
}
extern "C" void png_silent_warning(png_structp, png_const_charp) {}

RasterImage decode_png(const std::filesystem::path& path) {
  PngReadCloser ctx;
  ctx.file = std::fopen(path.string().c_str(), "rb");
  if (!ctx.file) raise(Errc::IoError, "cannot open " + path.string());

  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_silent_error,
                                 png_silent_warning);
  if (!ctx.png) raise(Errc::IoError, "png_create_read_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) raise(Errc::IoError, "png_create_info_struct failed");

  if (setjmp(png_jmpbuf(ctx.png))) {
    raise(Errc::CorruptFile, "PNG decode failed for " + path.string());
  }

  png_init_io(ctx.png, ctx.file);
  png_read_info(ctx.png, ctx.info);

  const png_uint_32 width = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 height = png_get_image_height(ctx.png, ctx.info);
  const int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
  const int color_type = png_get_color_type(ctx.png, ctx.info);

  // Normalize everything to 8-bit RGB.
  if (bit_depth == 16) png_set_strip_16(ctx.png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(ctx.png);
  }
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(ctx.png);
  }
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  RasterImage img(static_cast<int>(width), static_cast<int>(height));
  std::vector<png_bytep> row_ptrs(height);
  for (png_uint_32 y = 0; y < height; ++y) row_ptrs[y] = img.pixel(0, static_cast<int>(y));
  png_read_image(ctx.png, row_ptrs.data());
  png_read_end(ctx.png, nullptr);
  return img;
}

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (file) std::fclose(file);
  }
};

}  // namespace

ImageFormat detect_format(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) raise(Errc::IoError, "cannot open " + path.string());
  unsigned char magic[8] = {};
  const std::size_t n = std::fread(magic, 1, sizeof(magic), f);
  std::fclose(f);
  if (n >= 8 && std::memcmp(magic, "\x89PNG\r\n\x1a\n", 8) == 0) return ImageFormat::Png;
  // Classic TIFF (version 42) and BigTIFF (version 43), either byte order.
  if (n >= 4 && ((magic[0] == 'I' && magic[1] == 'I' && (magic[2] == 42 || magic[2] == 43) &&
                  magic[3] == 0) ||
                 (magic[0] == 'M' && magic[1] == 'M' && magic[2] == 0 &&
                  (magic[3] == 42 || magic[3] == 43)))) {
    return ImageFormat::Tiff;
  }
  return ImageFormat::Unknown;
}

RasterImage decode_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(Errc::IoError, "image not found: " + path.string());
  }
  switch (detect_format(path)) {
    case ImageFormat::Png: return decode_png(path);
    case ImageFormat::Tiff: return decode_tiff(path);
    case ImageFormat::Unknown:
      raise(Errc::UnsupportedFormat, "not a PNG or TIFF: " + path.string());
  }
  raise(Errc::UnsupportedFormat, "unreachable");
}

void write_png(const RasterImage& img, const std::filesystem::path& path) {
  if (!img.valid()) raise(Errc::InvalidParams, "cannot write invalid raster");

  PngWriteCloser ctx;
  ctx.file = std::fopen(path.string().c_str(), "wb");
  if (!ctx.file) raise(Errc::IoError, "cannot open " + path.string() + " for writing");

  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_silent_error,
                                  png_silent_warning);
  if (!ctx.png) raise(Errc::IoError, "png_create_write_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) raise(Errc::IoError, "png_create_info_struct failed");

  if (setjmp(png_jmpbuf(ctx.png))) {
    raise(Errc::IoError, "PNG encode failed for " + path.string());
  }

  png_init_io(ctx.png, ctx.file);
  png_set_compression_level(ctx.png, 6);
  png_set_IHDR(ctx.png, ctx.info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(ctx.png, const_cast<png_bytep>(img.pixel(0, y)));
  }
  png_write_end(ctx.png, nullptr);
}

void write_tiff(const RasterImage& img, const std::filesystem::path& path,
                const TiffWriteOptions& options) {
  if (!img.valid()) raise(Errc::InvalidParams, "cannot write invalid raster");

  TiffHandlerGuard guard;
  // BigTIFF only when the uncompressed payload could overflow classic offsets.
  const bool big = img.byte_size() > (3500ull << 20);
  TiffPtr tif(TIFFOpen(path.string().c_str(), big ? "w8" : "w"));
  if (!tif) raise(Errc::IoError, "cannot open " + path.string() + " for writing");

  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(img.width));
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(img.height));
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, 3);
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, 8);
  TIFFSetField(tif.get(), TIFFTAG_ORIENTATION, ORIENTATION_TOPLEFT);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_RGB);
  TIFFSetField(tif.get(), TIFFTAG_COMPRESSION,
               options.deflate ? COMPRESSION_ADOBE_DEFLATE : COMPRESSION_NONE);

  if (options.tile_size > 0) {
    const std::uint32_t tile = static_cast<std::uint32_t>(options.tile_size);
    TIFFSetField(tif.get(), TIFFTAG_TILEWIDTH, tile);
    TIFFSetField(tif.get(), TIFFTAG_TILELENGTH, tile);

    std::vector<std::uint8_t> buf(static_cast<std::size_t>(tile) * tile * 3);
    for (std::uint32_t ty = 0; ty < static_cast<std::uint32_t>(img.height); ty += tile) {
      for (std::uint32_t tx = 0; tx < static_cast<std::uint32_t>(img.width); tx += tile) {
        std::fill(buf.begin(), buf.end(), 0);
        const std::uint32_t copy_w = std::min(tile, static_cast<std::uint32_t>(img.width) - tx);
        const std::uint32_t copy_h = std::min(tile, static_cast<std::uint32_t>(img.height) - ty);
        for (std::uint32_t row = 0; row < copy_h; ++row) {
          std::memcpy(buf.data() + static_cast<std::size_t>(row) * tile * 3,
                      img.pixel(static_cast<int>(tx), static_cast<int>(ty + row)),
                      static_cast<std::size_t>(copy_w) * 3);
        }
        if (TIFFWriteTile(tif.get(), buf.data(), tx, ty, 0, 0) < 0) {
          raise(Errc::IoError, "tile write failed: " + g_tiff_error);
        }
      }
    }
  } else {
    TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, 64u);
    for (int y = 0; y < img.height; ++y) {
      if (TIFFWriteScanline(tif.get(), const_cast<std::uint8_t*>(img.pixel(0, y)), y, 0) < 0) {
        raise(Errc::IoError, "scanline write failed: " + g_tiff_error);
      }
    }
  }
}

}  // namespace clotkit
