#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "manipkit/errors.hpp"
#include "manipkit/grid.hpp"

namespace manipkit {

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("focal lengths must be > 0");
  }
};

/// Pixel (u,v) at depth z back-projects to ((u-cx)z/fx, (v-cy)z/fy, z) in the
/// camera frame (x right, y down, z forward).
inline Vec3 back_project(int u, int v, double z, const CameraIntrinsics& k) {
  return {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
}

/// Cross product of back-projected 4-neighbours, sign-flipped so nz < 0
/// (normals face the camera, which looks along +z). A pixel is valid only
/// when its whole 3x3 depth window is in-bounds and valid, so every
/// 8-neighbour of a depth hole comes out invalid.
inline NormalMap normals_from_depth(const DepthMap& depth, const CameraIntrinsics& k) {
  k.validate();
  NormalMap out(depth.width(), depth.height(), kInvalidNormal);
  std::size_t valid = 0;
  for (int y = 1; y + 1 < depth.height(); ++y) {
    for (int x = 1; x + 1 < depth.width(); ++x) {
      bool ok = true;
      for (int dy = -1; dy <= 1 && ok; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (depth.at(x + dx, y + dy) <= 0.0) {
            ok = false;
            break;
          }
      if (!ok) continue;
      const Vec3 right = back_project(x + 1, y, depth.at(x + 1, y), k);
      const Vec3 left = back_project(x - 1, y, depth.at(x - 1, y), k);
      const Vec3 down = back_project(x, y + 1, depth.at(x, y + 1), k);
      const Vec3 up = back_project(x, y - 1, depth.at(x, y - 1), k);
      Vec3 n = cross(right - left, down - up);
      const double len = norm(n);
      if (len == 0.0) continue;
      n = n / len;
      if (n.z > 0.0) n = -n;
      out.at(x, y) = n;
      ++valid;
    }
  }
  if (valid == 0) throw DataError("depth map has no valid 3x3 region");
  return out;
}

/// Normalized 2D Gaussian kernel of side (2*radius+1).
inline Grid<double> gaussian_kernel2d(double sigma, int radius) {
  if (!(sigma > 0.0)) throw ConfigError("blur sigma must be > 0");
  if (radius < 0) throw ConfigError("blur radius must be >= 0");
  const int side = 2 * radius + 1;
  Grid<double> k(side, side, 0.0);
  double sum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k.at(dx + radius, dy + radius) = w;
      sum += w;
    }
  for (double& w : k.data()) w /= sum;
  return k;
}

/// Per-channel Gaussian convolution with replicate borders. Invalid pixels
/// are dropped from the weighted sum (weights renormalized over the valid
/// neighbours), the result is renormalized to unit length, and a pixel stays
/// invalid iff it was invalid.
inline NormalMap gaussian_blur(const NormalMap& n, double sigma, int radius) {
  const Grid<double> kernel = gaussian_kernel2d(sigma, radius);
  NormalMap out(n.width(), n.height(), kInvalidNormal);
  for (int y = 0; y < n.height(); ++y) {
    for (int x = 0; x < n.width(); ++x) {
      if (!is_valid_normal(n.at(x, y))) continue;
      Vec3 acc{};
      double wsum = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int sy = std::clamp(y + dy, 0, n.height() - 1);
        for (int dx = -radius; dx <= radius; ++dx) {
          const int sx = std::clamp(x + dx, 0, n.width() - 1);
          const Vec3& s = n.at(sx, sy);
          if (!is_valid_normal(s)) continue;
          const double w = kernel.at(dx + radius, dy + radius);
          acc += s * w;
          wsum += w;
        }
      }
      acc = acc / wsum;
      const double len = norm(acc);
      // Opposing normals can cancel; keep the centre value then.
      out.at(x, y) = len > 1e-12 ? acc / len : n.at(x, y);
    }
  }
  return out;
}

struct GradientField {
  Grid<Vec2> dnx;  // spatial gradient of the x channel
  Grid<Vec2> dny;
  Grid<Vec2> dnz;
  Grid<double> magnitude;

  /// Finite stand-in for +inf on pixels whose stencil touches an invalid
  /// pixel; edge_mask treats it as an unconditional edge.
  static constexpr double kInvalidStencil = std::numeric_limits<double>::max();

  int width() const { return magnitude.width(); }
  int height() const { return magnitude.height(); }
};

/// Central differences per channel (forward/backward at the borders).
inline GradientField gradients(const NormalMap& n) {
  const int w = n.width();
  const int h = n.height();
  GradientField g{Grid<Vec2>(w, h), Grid<Vec2>(w, h), Grid<Vec2>(w, h),
                  Grid<double>(w, h, 0.0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(x - 1, 0), x1 = std::min(x + 1, w - 1);
      const int y0 = std::max(y - 1, 0), y1 = std::min(y + 1, h - 1);
      const bool ok = is_valid_normal(n.at(x, y)) && is_valid_normal(n.at(x0, y)) &&
                      is_valid_normal(n.at(x1, y)) && is_valid_normal(n.at(x, y0)) &&
                      is_valid_normal(n.at(x, y1));
      if (!ok) {
        g.magnitude.at(x, y) = GradientField::kInvalidStencil;
        continue;
      }
      const double ix = 1.0 / (x1 - x0);
      const double iy = 1.0 / (y1 - y0);
      const Vec3& xm = n.at(x0, y);
      const Vec3& xp = n.at(x1, y);
      const Vec3& ym = n.at(x, y0);
      const Vec3& yp = n.at(x, y1);
      g.dnx.at(x, y) = {(xp.x - xm.x) * ix, (yp.x - ym.x) * iy};
      g.dny.at(x, y) = {(xp.y - xm.y) * ix, (yp.y - ym.y) * iy};
      g.dnz.at(x, y) = {(xp.z - xm.z) * ix, (yp.z - ym.z) * iy};
      const Vec2 a = g.dnx.at(x, y), b = g.dny.at(x, y), c = g.dnz.at(x, y);
      g.magnitude.at(x, y) =
          std::sqrt(a.x * a.x + a.y * a.y + b.x * b.x + b.y * b.y + c.x * c.x + c.y * c.y);
    }
  }
  return g;
}

}  // namespace manipkit
