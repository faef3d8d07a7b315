#pragma once

#include <png.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "manipkit/errors.hpp"
#include "manipkit/grid.hpp"

namespace manipkit {

namespace detail {

struct PngReader {
  png_image im{};
  PngReader() { im.version = PNG_IMAGE_VERSION; }
  ~PngReader() { png_image_free(&im); }

  void begin(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
      throw IoError("file not found: " + path.string());
    if (!png_image_begin_read_from_file(&im, path.string().c_str()))
      throw IoError(path.string() + ": " + im.message);
  }

  void finish(void* buffer) {
    if (!png_image_finish_read(&im, nullptr, buffer, 0, nullptr))
      throw IoError(std::string("png read failed: ") + im.message);
  }
};

inline void png_write(const std::filesystem::path& path, png_uint_32 format,
                      int width, int height, const void* buffer) {
  png_image im{};
  im.version = PNG_IMAGE_VERSION;
  im.format = format;
  im.width = static_cast<png_uint_32>(width);
  im.height = static_cast<png_uint_32>(height);
  if (!png_image_write_to_file(&im, path.string().c_str(), 0, buffer, 0, nullptr)) {
    const std::string msg = im.message;
    png_image_free(&im);
    throw IoError("png write failed for " + path.string() + ": " + msg);
  }
  png_image_free(&im);
}

/// Integer rec.601 luma, rounded half-up.
inline int luminance(int r, int g, int b) { return (299 * r + 587 * g + 114 * b + 500) / 1000; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Binary masks: 8-bit gray PNG, foreground = 255. Any gray/color 8- or
// 16-bit file is accepted on load; a pixel is foreground iff its stored
// luminance exceeds 127 (high byte for 16-bit files).
// ---------------------------------------------------------------------------

inline BinaryMask load_mask(const std::filesystem::path& path) {
  detail::PngReader rd;
  rd.begin(path);
  const int w = static_cast<int>(rd.im.width);
  const int h = static_cast<int>(rd.im.height);
  if (w < 1 || h < 1) throw IoError("zero-dimension image: " + path.string());

  const bool sixteen = (rd.im.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  const bool color = (rd.im.format & PNG_FORMAT_FLAG_COLOR) != 0;

  BinaryMask mask(w, h, 0);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (sixteen) {
    rd.im.format = color ? PNG_FORMAT_LINEAR_RGB : PNG_FORMAT_LINEAR_Y;
    const int ch = color ? 3 : 1;
    std::vector<std::uint16_t> buf(n * ch);
    rd.finish(buf.data());
    for (std::size_t i = 0; i < n; ++i) {
      int lum;
      if (color)
        lum = detail::luminance(buf[i * 3] >> 8, buf[i * 3 + 1] >> 8, buf[i * 3 + 2] >> 8);
      else
        lum = buf[i] >> 8;
      mask.data()[i] = lum > 127 ? 1 : 0;
    }
  } else {
    rd.im.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GA;
    const int ch = color ? 4 : 2;
    std::vector<std::uint8_t> buf(n * ch);
    rd.finish(buf.data());
    for (std::size_t i = 0; i < n; ++i) {
      const int lum = color ? detail::luminance(buf[i * 4], buf[i * 4 + 1], buf[i * 4 + 2])
                            : buf[i * 2];
      mask.data()[i] = lum > 127 ? 1 : 0;
    }
  }
  return mask;
}

inline void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> buf(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) buf[i] = mask.data()[i] ? 255 : 0;
  detail::png_write(path, PNG_FORMAT_GRAY, mask.width(), mask.height(), buf.data());
}

// ---------------------------------------------------------------------------
// Normal maps: 8-bit RGB PNG. Valid pixel channel c = round((n_c + 1) *
// 127.5) with ties up; the (0,0,0) byte triple is reserved for the invalid
// sentinel (no unit vector reaches it: that would need every n_c < -0.996).
// ---------------------------------------------------------------------------

inline std::array<std::uint8_t, 3> encode_normal_pixel(const Vec3& n) {
  if (!is_valid_normal(n)) return {0, 0, 0};
  auto enc = [](double c) {
    double v = round_half_up((c + 1.0) * 127.5);
    if (v < 0.0) v = 0.0;
    if (v > 255.0) v = 255.0;
    return static_cast<std::uint8_t>(v);
  };
  return {enc(n.x), enc(n.y), enc(n.z)};
}

/// Throws IoError on a corrupt valid pixel (pre-normalization |n| < 0.5).
inline Vec3 decode_normal_pixel(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (r == 0 && g == 0 && b == 0) return kInvalidNormal;
  const Vec3 raw{r / 127.5 - 1.0, g / 127.5 - 1.0, b / 127.5 - 1.0};
  const double len = norm(raw);
  if (len < 0.5)
    throw IoError("corrupt normal map: non-sentinel pixel with |n| = " + std::to_string(len));
  return raw / len;
}

inline std::vector<std::uint8_t> encode_normal_map(const NormalMap& n) {
  std::vector<std::uint8_t> bytes(n.size() * 3);
  for (std::size_t i = 0; i < n.size(); ++i) {
    const auto px = encode_normal_pixel(n.data()[i]);
    bytes[i * 3] = px[0];
    bytes[i * 3 + 1] = px[1];
    bytes[i * 3 + 2] = px[2];
  }
  return bytes;
}

inline NormalMap decode_normal_map(const std::vector<std::uint8_t>& bytes, int width,
                                   int height) {
  if (bytes.size() != static_cast<std::size_t>(width) * height * 3)
    throw DimensionError("normal map byte length does not match dimensions");
  NormalMap n(width, height, kInvalidNormal);
  for (std::size_t i = 0; i < n.size(); ++i)
    n.data()[i] = decode_normal_pixel(bytes[i * 3], bytes[i * 3 + 1], bytes[i * 3 + 2]);
  return n;
}

inline void save_normal_map(const NormalMap& n, const std::filesystem::path& path) {
  const auto bytes = encode_normal_map(n);
  detail::png_write(path, PNG_FORMAT_RGB, n.width(), n.height(), bytes.data());
}

inline NormalMap load_normal_map(const std::filesystem::path& path) {
  detail::PngReader rd;
  rd.begin(path);
  if ((rd.im.format & PNG_FORMAT_FLAG_LINEAR) != 0 ||
      (rd.im.format & PNG_FORMAT_FLAG_COLOR) == 0)
    throw IoError("normal map must be an 8-bit RGB image: " + path.string());
  const int w = static_cast<int>(rd.im.width);
  const int h = static_cast<int>(rd.im.height);
  rd.im.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * 3);
  rd.finish(buf.data());
  return decode_normal_map(buf, w, h);
}

// ---------------------------------------------------------------------------
// Depth maps: 16-bit gray PNG, tick 0 = invalid, plus a JSON sidecar
// (same stem, .json) holding {"depth_scale", "width", "height"} with
// depth_scale in scene units per tick.
// ---------------------------------------------------------------------------

inline std::filesystem::path depth_sidecar_path(std::filesystem::path png_path) {
  return png_path.replace_extension(".json");
}

inline void save_depth(const DepthMap& d, const std::filesystem::path& path,
                       double depth_scale) {
  if (!(depth_scale > 0.0)) throw ConfigError("depth_scale must be > 0");
  std::vector<std::uint16_t> ticks(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double v = d.data()[i];
    if (v == 0.0) {
      ticks[i] = 0;
      continue;
    }
    const double t = round_half_up(v / depth_scale);
    if (t < 1.0 || t > 65535.0)
      throw ConfigError("depth value " + std::to_string(v) +
                        " not representable at scale " + std::to_string(depth_scale));
    ticks[i] = static_cast<std::uint16_t>(t);
  }
  detail::png_write(path, PNG_FORMAT_LINEAR_Y, d.width(), d.height(), ticks.data());

  nlohmann::json side{{"depth_scale", depth_scale}, {"width", d.width()}, {"height", d.height()}};
  std::ofstream out(depth_sidecar_path(path));
  if (!out) throw IoError("cannot write sidecar for " + path.string());
  out << side.dump(2) << "\n";
}

inline DepthMap load_depth(const std::filesystem::path& path) {
  detail::PngReader rd;
  rd.begin(path);
  if ((rd.im.format & PNG_FORMAT_FLAG_LINEAR) == 0 ||
      (rd.im.format & PNG_FORMAT_FLAG_COLOR) != 0)
    throw IoError("depth map must be a 16-bit grayscale image: " + path.string());
  const int w = static_cast<int>(rd.im.width);
  const int h = static_cast<int>(rd.im.height);
  rd.im.format = PNG_FORMAT_LINEAR_Y;
  std::vector<std::uint16_t> ticks(static_cast<std::size_t>(w) * h);
  rd.finish(ticks.data());

  const auto side_path = depth_sidecar_path(path);
  std::ifstream in(side_path);
  if (!in) throw IoError("missing depth sidecar: " + side_path.string());
  nlohmann::json side;
  try {
    in >> side;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad depth sidecar " + side_path.string() + ": " + e.what());
  }
  if (!side.contains("depth_scale") || !side["depth_scale"].is_number())
    throw IoError("depth sidecar missing depth_scale: " + side_path.string());
  const double scale = side["depth_scale"].get<double>();
  if (!(scale > 0.0)) throw IoError("depth_scale must be > 0: " + side_path.string());
  if (side.value("width", w) != w || side.value("height", h) != h)
    throw IoError("depth sidecar dimensions disagree with image: " + side_path.string());

  DepthMap d(w, h, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = ticks[i] * scale;
  return d;
}

// ---------------------------------------------------------------------------
// Plain RGB output, used by overlay rendering.
// ---------------------------------------------------------------------------

inline void save_rgb(const std::vector<std::uint8_t>& rgb, int width, int height,
                     const std::filesystem::path& path) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw DimensionError("rgb byte length does not match dimensions");
  detail::png_write(path, PNG_FORMAT_RGB, width, height, rgb.data());
}

}  // namespace manipkit
