#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "manipkit/grid.hpp"
#include "manipkit/image_io.hpp"
#include "manipkit/proposer.hpp"

namespace manipkit {

namespace detail {

inline void put_px(std::vector<std::uint8_t>& rgb, int w, int h, int x, int y,
                   std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || x >= w || y < 0 || y >= h) return;
  const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
  rgb[i] = r;
  rgb[i + 1] = g;
  rgb[i + 2] = b;
}

inline void draw_line(std::vector<std::uint8_t>& rgb, int w, int h, int x0, int y0, int x1,
                      int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put_px(rgb, w, h, x0, y0, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace detail

/// Debug picture: encoded normals as the background, mask tinted green,
/// a red crosshair on the contact, and the direction's image-plane
/// projection as a yellow arrow.
inline void save_overlay(const NormalMap& normals, const BinaryMask& mask,
                         const AffordanceProposal& proposal,
                         const std::filesystem::path& path) {
  const int w = normals.width(), h = normals.height();
  std::vector<std::uint8_t> rgb = encode_normal_map(normals);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (mask.at(x, y)) {
        const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
        rgb[i + 1] = static_cast<std::uint8_t>(std::min(255, rgb[i + 1] + 60));
      }

  const int cx = proposal.contact.x, cy = proposal.contact.y;
  for (int d = -4; d <= 4; ++d) {
    detail::put_px(rgb, w, h, cx + d, cy, 255, 40, 40);
    detail::put_px(rgb, w, h, cx, cy + d, 255, 40, 40);
  }

  const double px = proposal.direction.x, py = proposal.direction.y;
  const double len2d = std::hypot(px, py);
  if (len2d > 1e-6) {
    const double ux = px / len2d, uy = py / len2d;
    const int ex = cx + static_cast<int>(std::lround(ux * 28));
    const int ey = cy + static_cast<int>(std::lround(uy * 28));
    detail::draw_line(rgb, w, h, cx, cy, ex, ey, 255, 220, 40);
    const int bx = ex - static_cast<int>(std::lround(ux * 7 - uy * 4));
    const int by = ey - static_cast<int>(std::lround(uy * 7 + ux * 4));
    const int bx2 = ex - static_cast<int>(std::lround(ux * 7 + uy * 4));
    const int by2 = ey - static_cast<int>(std::lround(uy * 7 - ux * 4));
    detail::draw_line(rgb, w, h, ex, ey, bx, by, 255, 220, 40);
    detail::draw_line(rgb, w, h, ex, ey, bx2, by2, 255, 220, 40);
  } else {
    // Direction points straight at the camera; mark it with a circle.
    for (int a = 0; a < 32; ++a) {
      const double t = a * 2.0 * 3.14159265358979323846 / 32;
      detail::put_px(rgb, w, h, cx + static_cast<int>(std::lround(8 * std::cos(t))),
                     cy + static_cast<int>(std::lround(8 * std::sin(t))), 255, 220, 40);
    }
  }
  save_rgb(rgb, w, h, path);
}

}  // namespace manipkit
