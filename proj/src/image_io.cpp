// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/image_io.hpp"

#include <png.h>

#include <cctype>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

#include "motionforge/errors.hpp"

namespace motionforge {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::UnreadableFile, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::UnreadableFile, "write failed for " + path.string());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

struct PngReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::UnreadableFile, "png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::UnreadableFile, "png: out of memory");
  }
  Image image;
  std::vector<png_bytep> rows;
  PngReadCursor cursor{bytes, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::UnreadableFile, "png: malformed stream");
  }
  png_set_read_fn(png, &cursor, png_read_from_span);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  image.channels = png_get_channels(png, info);
  image.pixels.resize(static_cast<std::size_t>(image.width) * image.height * image.channels);
  rows.resize(static_cast<std::size_t>(image.height));
  for (int v = 0; v < image.height; ++v) rows[static_cast<std::size_t>(v)] = image.at(0, v);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

// Binary PNM: "P5"/"P6", whitespace/comment separated width, height, maxval.
Image decode_pnm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  auto next_token = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long value = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      any = true;
      ++pos;
      if (value > (1L << 24)) throw Error(ErrorCode::UnreadableFile, "pnm: header value too large");
    }
    if (!any) throw Error(ErrorCode::UnreadableFile, "pnm: malformed header");
    return value;
  };
  Image image;
  image.channels = bytes[1] == '5' ? 1 : 3;
  image.width = static_cast<int>(next_token());
  image.height = static_cast<int>(next_token());
  const long maxval = next_token();
  if (maxval != 255) throw Error(ErrorCode::UnreadableFile, "pnm: only 8-bit images are supported");
  ++pos;  // single whitespace after maxval
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (pos + n > bytes.size()) throw Error(ErrorCode::UnreadableFile, "pnm: truncated payload");
  image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return image;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 3 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return decode_pnm(bytes);
  throw Error(ErrorCode::UnreadableFile, "unsupported image format (expected PNG or binary PNM)");
}

Image read_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  int color_type = PNG_COLOR_TYPE_GRAY;
  switch (image.channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 2: color_type = PNG_COLOR_TYPE_GRAY_ALPHA; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGB_ALPHA; break;
    default: throw Error(ErrorCode::InvalidConfig, "png: unsupported channel count");
  }
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::UnreadableFile, "png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::UnreadableFile, "png: out of memory");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::UnreadableFile, "png: encode failed");
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int v = 0; v < image.height; ++v) {
    rows[static_cast<std::size_t>(v)] = const_cast<png_bytep>(image.at(0, v));
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) { write_file(path, encode_png(image)); }

Mask mask_from_image(const Image& image) {
  if (image.channels != 1) {
    throw Error(ErrorCode::InvalidManifest, "mask images must be single-channel 8-bit");
  }
  Mask mask(image.width, image.height);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = image.pixels[i] != 0 ? 1 : 0;
  return mask;
}

Image image_from_mask(const Mask& mask) {
  Image image{mask.width(), mask.height(), 1, {}};
  image.pixels.resize(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) image.pixels[i] = mask[i] ? 255 : 0;
  return image;
}

Mask read_mask(const std::filesystem::path& path) { return mask_from_image(read_image(path)); }

}  // namespace motionforge
