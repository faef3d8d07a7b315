#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "manipkit/errors.hpp"
#include "manipkit/geometry.hpp"

namespace manipkit {

/// Row-major 2D grid, origin top-left, x = column, y = row.
template <typename T>
class Grid {
 public:
  Grid() = default;

  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height)
      throw DimensionError("grid data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(width) + "x" +
                           std::to_string(height));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_size(int w, int h) const { return width_ == w && height_ == h; }

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1)
      throw DimensionError("grid dimensions must be >= 1, got " +
                           std::to_string(width) + "x" + std::to_string(height));
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Foreground = 1 (manipulable), background = 0.
using BinaryMask = Grid<std::uint8_t>;

/// Depth in scene units along the camera z axis; 0 marks an invalid pixel.
using DepthMap = Grid<double>;

/// Per-pixel unit normals in the camera frame; exact (0,0,0) marks an
/// invalid pixel, and that sentinel is what the proposer cascade tests.
using NormalMap = Grid<Vec3>;

inline constexpr Vec3 kInvalidNormal{0.0, 0.0, 0.0};

inline bool is_valid_normal(const Vec3& n) {
  return n.x != 0.0 || n.y != 0.0 || n.z != 0.0;
}

struct PixelCoord {
  int x = 0;
  int y = 0;
  bool operator==(const PixelCoord& o) const { return x == o.x && y == o.y; }
};

template <typename A, typename B>
void require_same_size(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw DimensionError(std::string(what) + ": " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                         "x" + std::to_string(b.height()));
}

inline std::size_t foreground_count(const BinaryMask& m) {
  std::size_t n = 0;
  for (std::uint8_t v : m.data()) n += (v != 0);
  return n;
}

}  // namespace manipkit
