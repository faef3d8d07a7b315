#pragma once

// Synthetic proposer fixtures shared by the unit, CLI, and acceptance suites.

#include <cmath>

#include "manipkit/grid.hpp"

namespace manipkit::fixtures {

struct MaskedMap {
  NormalMap normals;
  BinaryMask mask;
};

/// Fronto-parallel panel: every pixel (0,0,-1), mask a centered rectangle.
inline MaskedMap flat_panel(int w = 30, int h = 20, int inset_x = 5, int inset_y = 3) {
  MaskedMap f{NormalMap(w, h, Vec3{0, 0, -1}), BinaryMask(w, h, 0)};
  for (int y = inset_y; y < h - inset_y; ++y)
    for (int x = inset_x; x < w - inset_x; ++x) f.mask.at(x, y) = 1;
  return f;
}

/// Flat panel with a spherical-cap bump at the mask centroid. The bump's
/// normals swing fast enough that the gradient filter marks the whole cap
/// as edges, so the centroid pixel is never usable.
inline MaskedMap handle_panel(int w = 60, int h = 40, int bump_radius = 6) {
  MaskedMap f{NormalMap(w, h, Vec3{0, 0, -1}), BinaryMask(w, h, 0)};
  for (int y = 5; y < h - 5; ++y)
    for (int x = 10; x < w - 10; ++x) f.mask.at(x, y) = 1;
  const double cx = 30.0, cy = 20.0;  // centroid of the mask rectangle, rounded
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = (x - cx) / bump_radius, dy = (y - cy) / bump_radius;
      const double rr = dx * dx + dy * dy;
      if (rr >= 1.0) continue;
      const double s = 0.85;
      f.normals.at(x, y) =
          normalized(Vec3{dx * s, dy * s, -std::sqrt(std::max(0.02, 1.0 - s * s * rr))});
    }
  return f;
}

/// Annulus whose centroid falls in the hole; the ring carries two constant
/// normal populations. The first (row-major) block of pixels gets `minor`,
/// the remaining `major_fraction` share gets `major`, so `major` wins by
/// count while `minor` owns the earliest pixel for tie-break tests.
inline MaskedMap ring_map(int size, double inner, double outer, const Vec3& major,
                          const Vec3& minor, double major_fraction) {
  MaskedMap f{NormalMap(size, size, Vec3{0, 0, -1}), BinaryMask(size, size, 0)};
  const double c = (size - 1) / 2.0;
  std::vector<std::size_t> ring_pixels;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double r = std::hypot(x - c, y - c);
      if (r >= inner && r <= outer) {
        f.mask.at(x, y) = 1;
        ring_pixels.push_back(f.mask.index(x, y));
      }
    }
  const std::size_t minor_count =
      ring_pixels.size() -
      static_cast<std::size_t>(ring_pixels.size() * major_fraction);
  for (std::size_t i = 0; i < ring_pixels.size(); ++i)
    f.normals.data()[ring_pixels[i]] = i < minor_count ? minor : major;
  return f;
}

}  // namespace manipkit::fixtures
