#pragma once

// PNG (libpng simplified API) and JPEG (libjpeg) decoding to 8-bit sRGB,
// plus PNG writing for masks and previews.

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "leafscan/error.hpp"
#include "leafscan/raster.hpp"

namespace leafscan {

enum class ImageFormat { Png, Jpeg, Unknown };

inline ImageFormat sniff_image_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char head[8] = {};
  in.read(reinterpret_cast<char*>(head), sizeof head);
  if (in.gcount() >= 8 && png_sig_cmp(head, 0, 8) == 0) return ImageFormat::Png;
  if (in.gcount() >= 3 && head[0] == 0xFF && head[1] == 0xD8 && head[2] == 0xFF) return ImageFormat::Jpeg;
  return ImageFormat::Unknown;
}

namespace detail {

inline RgbImage from_rgb_bytes(std::size_t width, std::size_t height, const std::vector<unsigned char>& bytes) {
  std::vector<Rgb> px(width * height);
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = Rgb{bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]};
  }
  return RgbImage(width, height, std::move(px));
}

inline RgbImage decode_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw InputError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  if (img.width == 0 || img.height == 0) {
    png_image_free(&img);
    throw InputError("empty PNG " + path.string());
  }
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(img));
  // Transparent pixels are composited over white.
  png_color white{255, 255, 255};
  if (!png_image_finish_read(&img, &white, buffer.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw InputError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return from_rgb_bytes(img.width, img.height, buffer);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

extern "C" inline void leafscan_jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Plain-C style body: no objects with destructors live across setjmp.
inline bool decode_jpeg_raw(std::FILE* file, std::vector<unsigned char>& out, unsigned& width,
                            unsigned& height, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = leafscan_jpeg_error_exit;
  err.message[0] = '\0';
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = cinfo.output_width;
  height = cinfo.output_height;
  out.resize(static_cast<std::size_t>(width) * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

inline RgbImage decode_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!file) throw InputError("cannot open " + path.string());
  std::vector<unsigned char> bytes;
  unsigned width = 0, height = 0;
  char message[JMSG_LENGTH_MAX] = {};
  if (!decode_jpeg_raw(file.get(), bytes, width, height, message)) {
    throw InputError("cannot decode JPEG " + path.string() + ": " + message);
  }
  if (width == 0 || height == 0) throw InputError("empty JPEG " + path.string());
  return from_rgb_bytes(width, height, bytes);
}

}  // namespace detail

/// Decodes a PNG or JPEG file (detected from its signature) to 8-bit RGB.
inline RgbImage read_image(const std::filesystem::path& path) {
  switch (sniff_image_format(path)) {
    case ImageFormat::Png: return detail::decode_png(path);
    case ImageFormat::Jpeg: return detail::decode_jpeg(path);
    case ImageFormat::Unknown: break;
  }
  throw InputError("not a PNG or JPEG image: " + path.string());
}

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  std::vector<unsigned char> bytes;
  bytes.reserve(img.size() * 3);
  for (const Rgb& p : img.pixels()) {
    bytes.push_back(p.r);
    bytes.push_back(p.g);
    bytes.push_back(p.b);
  }
  png_image out;
  std::memset(&out, 0, sizeof out);
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(img.width());
  out.height = static_cast<png_uint_32>(img.height());
  out.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&out, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    throw InputError("cannot write PNG " + path.string() + ": " + out.message);
  }
}

/// Grayscale PNG, 255 where the mask is set.
inline void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<unsigned char> bytes;
  bytes.reserve(mask.size());
  for (auto v : mask.pixels()) bytes.push_back(v ? 255 : 0);
  png_image out;
  std::memset(&out, 0, sizeof out);
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(mask.width());
  out.height = static_cast<png_uint_32>(mask.height());
  out.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&out, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    throw InputError("cannot write PNG " + path.string() + ": " + out.message);
  }
}

/// Box-filter reduction by an integer factor (1 = unchanged).
inline RgbImage downscale(const RgbImage& img, int factor) {
  if (factor < 1) throw InputError("downscale factor must be >= 1");
  if (factor == 1) return img;
  const std::size_t f = static_cast<std::size_t>(factor);
  const std::size_t w = std::max<std::size_t>(1, img.width() / f);
  const std::size_t h = std::max<std::size_t>(1, img.height() / f);
  RgbImage out(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      unsigned sr = 0, sg = 0, sb = 0, n = 0;
      for (std::size_t dr = 0; dr < f && r * f + dr < img.height(); ++dr) {
        for (std::size_t dc = 0; dc < f && c * f + dc < img.width(); ++dc) {
          const Rgb& p = img(r * f + dr, c * f + dc);
          sr += p.r;
          sg += p.g;
          sb += p.b;
          ++n;
        }
      }
      out(r, c) = Rgb{static_cast<std::uint8_t>((sr + n / 2) / n), static_cast<std::uint8_t>((sg + n / 2) / n),
                      static_cast<std::uint8_t>((sb + n / 2) / n)};
    }
  }
  return out;
}

}  // namespace leafscan
