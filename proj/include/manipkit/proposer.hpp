#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "manipkit/errors.hpp"
#include "manipkit/grid.hpp"
#include "manipkit/normals.hpp"
#include "manipkit/rng.hpp"

namespace manipkit {

struct ProposerConfig {
  double filter_value = 0.1;  // gradient-magnitude threshold
  double blur_sigma = 1.0;
  int blur_radius = 2;
  std::uint64_t rng_seed = 0;
  int normal_quantization = 2;  // decimals kept when counting normal classes
  // The published cascade asks for a box in which *every* pixel is valid
  // before sampling inside it, but the box is centred on a pixel already
  // known to be invalid, so that test can never pass. relaxed_bbox switches
  // to "sample among the valid pixels of the box, if any".
  bool relaxed_bbox = false;

  void validate() const {
    if (!(filter_value > 0.0)) throw ConfigError("filter_value must be > 0");
    if (!(blur_sigma > 0.0)) throw ConfigError("blur_sigma must be > 0");
    if (blur_radius < 0) throw ConfigError("blur_radius must be >= 0");
    if (normal_quantization < 0) throw ConfigError("normal_quantization must be >= 0");
  }
};

enum class FallbackKind { kCentroid, kBboxRandom, kMaskRandom };

inline const char* to_string(FallbackKind k) {
  switch (k) {
    case FallbackKind::kCentroid: return "centroid";
    case FallbackKind::kBboxRandom: return "bbox_random";
    case FallbackKind::kMaskRandom: return "mask_random";
  }
  return "?";
}

inline FallbackKind fallback_from_string(const std::string& s) {
  if (s == "centroid") return FallbackKind::kCentroid;
  if (s == "bbox_random") return FallbackKind::kBboxRandom;
  if (s == "mask_random") return FallbackKind::kMaskRandom;
  throw ConfigError("unknown fallback kind: " + s);
}

struct AffordanceProposal {
  PixelCoord contact;
  Vec3 direction;  // unit, camera frame
  FallbackKind used_fallback = FallbackKind::kCentroid;
  NormalMap masked_normals;  // N_masked, kept for diagnostics
  std::uint64_t seed = 0;
};

/// Foreground iff the gradient magnitude exceeds the filter value; pixels
/// with an invalid stencil are always edges.
inline BinaryMask edge_mask(const GradientField& g, double filter_value) {
  BinaryMask m(g.width(), g.height(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double v = g.magnitude.data()[i];
    m.data()[i] = (v == GradientField::kInvalidStencil || v > filter_value) ? 1 : 0;
  }
  return m;
}

/// N_masked: the normal map restricted to flat (non-edge) pixels inside the
/// part mask; everything else becomes the (0,0,0) sentinel.
inline NormalMap masked_normals(const NormalMap& n, const BinaryMask& edges,
                                const BinaryMask& part) {
  require_same_size(n, edges, "normal map vs edge mask");
  require_same_size(n, part, "normal map vs part mask");
  NormalMap out(n.width(), n.height(), kInvalidNormal);
  for (std::size_t i = 0; i < n.size(); ++i)
    if (part.data()[i] && !edges.data()[i]) out.data()[i] = n.data()[i];
  return out;
}

/// Rounded (half-up) mean of the foreground pixel coordinates.
inline PixelCoord centroid(const BinaryMask& m) {
  double sx = 0.0, sy = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y)) {
        sx += x;
        sy += y;
        ++count;
      }
  if (count == 0) throw DataError("centroid of empty mask");
  return {static_cast<int>(round_half_up(sx / count)),
          static_cast<int>(round_half_up(sy / count))};
}

namespace detail {

struct NormalClass {
  std::size_t count = 0;
  std::size_t first_index = 0;
};

struct TripleKey {
  std::int64_t a, b, c;
  bool operator==(const TripleKey& o) const { return a == o.a && b == o.b && c == o.c; }
};

struct TripleKeyHash {
  std::size_t operator()(const TripleKey& k) const {
    std::uint64_t h = hash_mix(static_cast<std::uint64_t>(k.a), static_cast<std::uint64_t>(k.b));
    return static_cast<std::size_t>(hash_mix(h, static_cast<std::uint64_t>(k.c)));
  }
};

/// Most frequent quantized normal; ties go to the class whose first member
/// comes earliest in row-major order. Returns the first member's exact value.
inline Vec3 most_frequent_normal(const NormalMap& nm, int decimals) {
  const double scale = std::pow(10.0, decimals);
  std::unordered_map<TripleKey, NormalClass, TripleKeyHash> classes;
  for (std::size_t i = 0; i < nm.size(); ++i) {
    const Vec3& n = nm.data()[i];
    if (!is_valid_normal(n)) continue;
    const TripleKey key{std::llround(n.x * scale), std::llround(n.y * scale),
                        std::llround(n.z * scale)};
    auto [it, inserted] = classes.try_emplace(key, NormalClass{0, i});
    ++it->second.count;
  }
  if (classes.empty()) throw NoProposalError("masked normal map is entirely invalid");
  const NormalClass* best = nullptr;
  for (const auto& [key, cls] : classes) {
    if (!best || cls.count > best->count ||
        (cls.count == best->count && cls.first_index < best->first_index))
      best = &cls;
  }
  return nm.data()[best->first_index];
}

}  // namespace detail

/// The full cascade: blur, gradient filter, masked normals, then the
/// centroid / centred-box / anywhere-in-mask contact choice.
inline AffordanceProposal propose(const NormalMap& n_map, const BinaryMask& m_part,
                                  const ProposerConfig& cfg) {
  cfg.validate();
  require_same_size(n_map, m_part, "normal map vs part mask");
  if (foreground_count(m_part) == 0) throw DataError("part mask is empty");

  const NormalMap blurred = gaussian_blur(n_map, cfg.blur_sigma, cfg.blur_radius);
  const GradientField g = gradients(blurred);
  const BinaryMask edges = edge_mask(g, cfg.filter_value);
  // Direction values are read from the original, un-blurred normals.
  NormalMap nm = masked_normals(n_map, edges, m_part);

  AffordanceProposal out;
  out.seed = cfg.rng_seed;

  const PixelCoord c = centroid(m_part);
  if (nm.in_bounds(c.x, c.y) && is_valid_normal(nm.at(c.x, c.y))) {
    out.contact = c;
    out.direction = nm.at(c.x, c.y);
    out.used_fallback = FallbackKind::kCentroid;
    out.masked_normals = std::move(nm);
    return out;
  }

  out.direction = detail::most_frequent_normal(nm, cfg.normal_quantization);

  // Centred box with one-third the part's bounding-box dimensions.
  int xmin = nm.width(), xmax = -1, ymin = nm.height(), ymax = -1;
  for (int y = 0; y < m_part.height(); ++y)
    for (int x = 0; x < m_part.width(); ++x)
      if (m_part.at(x, y)) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
  const int bw = (xmax - xmin + 1 + 2) / 3;  // ceil(w/3)
  const int bh = (ymax - ymin + 1 + 2) / 3;
  const int bx0 = std::max(c.x - (bw - 1) / 2, 0);
  const int by0 = std::max(c.y - (bh - 1) / 2, 0);
  const int bx1 = std::min(c.x - (bw - 1) / 2 + bw - 1, nm.width() - 1);
  const int by1 = std::min(c.y - (bh - 1) / 2 + bh - 1, nm.height() - 1);

  std::vector<PixelCoord> box_valid;
  bool box_all_valid = bx0 <= bx1 && by0 <= by1;
  for (int y = by0; y <= by1; ++y)
    for (int x = bx0; x <= bx1; ++x) {
      if (is_valid_normal(nm.at(x, y)))
        box_valid.push_back({x, y});
      else
        box_all_valid = false;
    }

  const bool use_box = cfg.relaxed_bbox ? !box_valid.empty() : box_all_valid;
  if (use_box) {
    out.contact = seeded_pick(box_valid, cfg.rng_seed);
    out.used_fallback = FallbackKind::kBboxRandom;
  } else {
    std::vector<PixelCoord> mask_valid;
    for (int y = 0; y < nm.height(); ++y)
      for (int x = 0; x < nm.width(); ++x)
        if (is_valid_normal(nm.at(x, y))) mask_valid.push_back({x, y});
    if (mask_valid.empty()) throw NoProposalError("masked normal map is entirely invalid");
    out.contact = seeded_pick(mask_valid, cfg.rng_seed);
    out.used_fallback = FallbackKind::kMaskRandom;
  }
  out.masked_normals = std::move(nm);
  return out;
}

inline nlohmann::json proposal_to_json(const AffordanceProposal& p) {
  return nlohmann::json{{"contact_px", {p.contact.x, p.contact.y}},
                        {"direction", {p.direction.x, p.direction.y, p.direction.z}},
                        {"fallback", to_string(p.used_fallback)},
                        {"seed", p.seed}};
}

}  // namespace manipkit
