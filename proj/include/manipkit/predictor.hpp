#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>

#include "manipkit/errors.hpp"
#include "manipkit/grid.hpp"
#include "manipkit/image_io.hpp"
#include "manipkit/policies.hpp"
#include "manipkit/rng.hpp"
#include "manipkit/sim.hpp"

namespace manipkit {

/// Morphological dilation with a square (Chebyshev) structuring element.
inline BinaryMask dilate(const BinaryMask& m, int radius) {
  if (radius <= 0) return m;
  BinaryMask out(m.width(), m.height(), 0);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      const int x0 = std::max(x - radius, 0), x1 = std::min(x + radius, m.width() - 1);
      const int y0 = std::max(y - radius, 0), y1 = std::min(y + radius, m.height() - 1);
      for (int sy = y0; sy <= y1; ++sy)
        for (int sx = x0; sx <= x1; ++sx) out.at(sx, sy) = 1;
    }
  return out;
}

inline BinaryMask erode(const BinaryMask& m, int radius) {
  if (radius <= 0) return m;
  BinaryMask out(m.width(), m.height(), 0);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (int sy = y - radius; sy <= y + radius && all; ++sy)
        for (int sx = x - radius; sx <= x + radius; ++sx)
          if (!m.in_bounds(sx, sy) || !m.at(sx, sy)) {
            all = false;
            break;
          }
      out.at(x, y) = all ? 1 : 0;
    }
  return out;
}

/// Per-pixel Bernoulli flips, keyed by (seed, pixel index) so the noise is
/// order-independent and platform-stable.
inline BinaryMask bernoulli_flip(const BinaryMask& m, double p, std::uint64_t seed) {
  if (p <= 0.0) return m;
  BinaryMask out = m;
  for (std::size_t i = 0; i < m.size(); ++i) {
    SplitMix rng(hash_mix(seed, i));
    if (rng.uniform_double() < p) out.data()[i] = m.data()[i] ? 0 : 1;
  }
  return out;
}

struct PredictorSpec {
  enum class Kind { kOracle, kNoisyOracle, kFile };

  Kind kind = Kind::kOracle;
  int dilate_radius = 0;
  int erode_radius = 0;
  double flip_prob = 0.0;
  std::uint64_t noise_seed = 0;
  std::filesystem::path mask_dir;

  void validate() const {
    if (dilate_radius < 0 || erode_radius < 0 || flip_prob < 0.0 || flip_prob > 1.0)
      throw ConfigError("noise parameters must be >= 0 (flip probability <= 1)");
    if (kind == Kind::kFile && !std::filesystem::is_directory(mask_dir))
      throw ConfigError("mask directory does not exist: " + mask_dir.string());
  }

  /// "oracle" | "noisy[:dilate=D,erode=E,flip=P,seed=S]" | "file:DIR"
  static PredictorSpec parse(const std::string& text) {
    PredictorSpec spec;
    if (text == "oracle") return spec;
    if (text.rfind("file:", 0) == 0) {
      spec.kind = Kind::kFile;
      spec.mask_dir = text.substr(5);
      spec.validate();
      return spec;
    }
    if (text == "noisy" || text.rfind("noisy:", 0) == 0) {
      spec.kind = Kind::kNoisyOracle;
      std::string rest = text.size() > 5 ? text.substr(6) : "";
      while (!rest.empty()) {
        const std::size_t comma = rest.find(',');
        const std::string item = rest.substr(0, comma);
        rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("bad noisy parameter: " + item);
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        try {
          if (key == "dilate")
            spec.dilate_radius = std::stoi(val);
          else if (key == "erode")
            spec.erode_radius = std::stoi(val);
          else if (key == "flip")
            spec.flip_prob = std::stod(val);
          else if (key == "seed")
            spec.noise_seed = std::stoull(val);
          else
            throw ConfigError("unknown noisy parameter: " + key);
        } catch (const std::invalid_argument&) {
          throw ConfigError("bad value for noisy parameter " + key + ": " + val);
        }
      }
      spec.validate();
      return spec;
    }
    throw ConfigError("unknown predictor spec: " + text +
                      " (expected oracle | noisy:... | file:DIR)");
  }

  Predictor make() const {
    validate();
    switch (kind) {
      case Kind::kOracle:
        return [](const Scene& scene, const RenderResult& rr, std::uint64_t) {
          return rr.part_masks[scene.target_part];
        };
      case Kind::kNoisyOracle: {
        const PredictorSpec spec = *this;
        return [spec](const Scene& scene, const RenderResult& rr, std::uint64_t seed) {
          BinaryMask m = rr.part_masks[scene.target_part];
          m = dilate(m, spec.dilate_radius);
          m = erode(m, spec.erode_radius);
          return bernoulli_flip(m, spec.flip_prob, hash_mix(spec.noise_seed, seed));
        };
      }
      case Kind::kFile: {
        const std::filesystem::path dir = mask_dir;
        return [dir](const Scene& scene, const RenderResult&, std::uint64_t) {
          return load_mask(dir / (scene.name + ".png"));
        };
      }
    }
    throw ConfigError("unreachable predictor kind");
  }
};

}  // namespace manipkit
