#pragma once

// Synthetic test sequences with exact ground truth.
//
// A smoothed random texture (the target) is pasted onto a gently varying
// background and moved horizontally by `speed` pixels per frame. The occlude
// variant additionally paints a uniform block over the lower half of the
// target (plus a 2 px margin left, right and below) on frames
// occlusion_first..occlusion_last (1-based). Pixel values are quantized to
// 8 bits so in-memory frames match frames round-tripped through PNG.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pjs/box.hpp"
#include "pjs/motion.hpp"

namespace pjs {

enum class SynthKind { kTranslate, kOcclude, kStatic };

inline SynthKind parse_synth_kind(const std::string& s) {
  if (s == "translate") return SynthKind::kTranslate;
  if (s == "occlude") return SynthKind::kOcclude;
  if (s == "static") return SynthKind::kStatic;
  throw InvalidInput("unknown synthetic kind \"" + s + "\" (expected translate, occlude or static)");
}

struct SynthParams {
  int frames = 20;
  int width = 160;
  int height = 120;
  int target_side = 40;
  double speed = 2.0;  // px/frame along x; ignored for kStatic
  double start_x = 30.0;
  double start_y = 40.0;
  int occlusion_first = 10;
  int occlusion_last = 12;
  double occluder_value = 0.35;
  std::uint64_t texture_seed = 7;
};

struct SyntheticSequence {
  std::vector<GrayFrame> frames;
  std::vector<Box> ground_truth;
  std::vector<bool> occluded;  // per frame
};

inline double quantize8(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

/// width x height texture in [0.1, 0.85], row-major: uniform noise smoothed by
/// `passes` 3x3 box-blur passes.
inline std::vector<double> make_texture(int width, int height, std::uint64_t seed, int passes = 2) {
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> tex(static_cast<std::size_t>(width) * height);
  for (double& v : tex) v = uni(rng);
  auto at = [&](const std::vector<double>& t, int x, int y) {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return t[static_cast<std::size_t>(y) * width + x];
  };
  for (int pass = 0; pass < passes; ++pass) {
    std::vector<double> out(tex.size());
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double s = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) s += at(tex, x + dx, y + dy);
        out[static_cast<std::size_t>(y) * width + x] = s / 9.0;
      }
    tex = std::move(out);
  }
  const auto [lo, hi] = std::minmax_element(tex.begin(), tex.end());
  const double lo_v = *lo, span = std::max(1e-12, *hi - *lo);
  for (double& v : tex) v = 0.1 + 0.75 * (v - lo_v) / span;
  return tex;
}

/// A frame that is texture everywhere, quantized like make_synthetic frames.
inline GrayFrame make_textured_field(int width, int height, std::uint64_t seed, int passes = 2) {
  std::vector<double> tex = make_texture(width, height, seed, passes);
  for (double& v : tex) v = quantize8(v);
  return GrayFrame(width, height, std::move(tex));
}

inline SyntheticSequence make_synthetic(SynthKind kind, const SynthParams& p = {}) {
  if (p.frames < 1 || p.width < 1 || p.height < 1 || p.target_side < 1)
    throw InvalidInput("synthetic sequence dimensions must be positive");
  const std::vector<double> tex = make_texture(p.target_side, p.target_side, p.texture_seed);
  const GrayFrame texture(p.target_side, p.target_side, tex);
  const double speed = kind == SynthKind::kStatic ? 0.0 : p.speed;

  SyntheticSequence seq;
  for (int f = 1; f <= p.frames; ++f) {
    const Box box{p.start_x + speed * (f - 1), p.start_y, static_cast<double>(p.target_side),
                  static_cast<double>(p.target_side)};
    const bool occluded = kind == SynthKind::kOcclude && f >= p.occlusion_first && f <= p.occlusion_last;
    std::vector<double> pixels(static_cast<std::size_t>(p.width) * p.height);
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        const double cx = x + 0.5, cy = y + 0.5;
        double v = 0.5 + 0.08 * std::sin(x / 7.0) * std::cos(y / 9.0);
        if (cx >= box.x && cx < box.x + box.w && cy >= box.y && cy < box.y + box.h)
          v = sample_bilinear(texture, cx - box.x - 0.5, cy - box.y - 0.5);
        if (occluded && cx >= box.x - 2 && cx < box.x + box.w + 2 && cy >= box.y + box.h / 2 &&
            cy < box.y + box.h + 2)
          v = p.occluder_value;
        pixels[static_cast<std::size_t>(y) * p.width + x] = quantize8(v);
      }
    }
    seq.frames.emplace_back(p.width, p.height, std::move(pixels));
    seq.ground_truth.push_back(box);
    seq.occluded.push_back(occluded);
  }
  return seq;
}

}  // namespace pjs
