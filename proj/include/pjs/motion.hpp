#pragma once

// Particle-filter motion model over 6-parameter affine states, and candidate
// extraction (warp + crop + resize, then patch partition).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pjs/box.hpp"
#include "pjs/error.hpp"

namespace pjs {

using Rng = std::mt19937_64;

/// Row-major grayscale image with luminance in [0, 1].
class GrayFrame {
 public:
  GrayFrame() = default;
  GrayFrame(int width, int height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width_ < 1 || height_ < 1) throw InvalidInput("frame must be at least 1x1");
    if (pixels_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
      throw InvalidInput("frame pixel count does not match width*height");
    for (double v : pixels_)
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw InvalidInput("frame luminance outside [0,1]");
  }
  static GrayFrame filled(int width, int height, double value) {
    return GrayFrame(width, height,
                     std::vector<double>(static_cast<std::size_t>(width) * height, value));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + x];
  }
  const std::vector<double>& pixels() const { return pixels_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Affine warp from template coordinates to frame coordinates.
/// tx, ty locate the template center; scale is target width / template width.
struct AffineState {
  double tx = 0.0;
  double ty = 0.0;
  double rotation = 0.0;  // radians
  double scale = 1.0;
  double aspect = 1.0;    // height / width
  double skew = 0.0;

  static constexpr std::size_t kDims = 6;

  std::array<double, kDims> as_array() const { return {tx, ty, rotation, scale, aspect, skew}; }
  static AffineState from_array(const std::array<double, kDims>& p) {
    return {p[0], p[1], p[2], p[3], p[4], p[5]};
  }
  bool valid() const {
    for (double v : as_array())
      if (!std::isfinite(v)) return false;
    return scale > 0.0 && aspect > 0.0;
  }

  /// tx = x + w/2, ty = y + h/2, no rotation/skew, scale = w / template_side, aspect = h / w.
  static AffineState from_box(const Box& box, int template_side) {
    return {box.center_x(), box.center_y(), 0.0, box.w / template_side, box.h / box.w, 0.0};
  }

  friend bool operator==(const AffineState&, const AffineState&) = default;
};

/// Linear part A = R(rotation) * [[s, s*skew], [0, s*aspect]].
inline Eigen::Matrix2d affine_linear_part(const AffineState& s) {
  Eigen::Matrix2d shape;
  shape << s.scale, s.scale * s.skew, 0.0, s.scale * s.aspect;
  const double c = std::cos(s.rotation);
  const double n = std::sin(s.rotation);
  Eigen::Matrix2d rot;
  rot << c, -n, n, c;
  return rot * shape;
}

struct ParticleSet {
  std::vector<AffineState> states;
  std::vector<double> weights;

  static ParticleSet replicate(const AffineState& state, std::size_t count) {
    if (count == 0) throw InvalidInput("particle set needs at least one particle");
    return {std::vector<AffineState>(count, state),
            std::vector<double>(count, 1.0 / static_cast<double>(count))};
  }
  std::size_t size() const { return states.size(); }
};

/// Per-component standard deviations in (tx, ty, rotation, scale, aspect, skew) order.
struct TransitionNoise {
  std::array<double, AffineState::kDims> sigma{6.0, 6.0, 0.02, 0.002, 0.002, 0.0};
};

/// Random-walk prediction step. Consumes exactly six N(0,1) draws per particle
/// (particle order, then component order), including components with zero sigma.
inline ParticleSet propagate(const ParticleSet& particles, const TransitionNoise& noise, Rng& rng) {
  for (double s : noise.sigma)
    if (!(s >= 0.0)) throw InvalidInput("transition noise must be non-negative");
  std::normal_distribution<double> gauss(0.0, 1.0);
  ParticleSet out;
  out.states.reserve(particles.size());
  for (const auto& state : particles.states) {
    auto p = state.as_array();
    for (std::size_t c = 0; c < AffineState::kDims; ++c) p[c] += noise.sigma[c] * gauss(rng);
    out.states.push_back(AffineState::from_array(p));
  }
  out.weights.assign(particles.size(), 1.0 / static_cast<double>(particles.size()));
  return out;
}

/// Systematic resampling: one u ~ U[0, 1/count) and strata u + i/count against the
/// cumulative weights. Weights are normalized internally; all-zero weights throw.
inline ParticleSet resample(const ParticleSet& particles, Rng& rng, std::size_t count) {
  if (particles.states.size() != particles.weights.size() || particles.states.empty())
    throw InvalidInput("particle states and weights disagree in size");
  if (count == 0) throw InvalidInput("resample count must be positive");
  double total = 0.0;
  for (double w : particles.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("particle weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw DegenerateError("all particle weights are zero");

  const double step = 1.0 / static_cast<double>(count);
  std::uniform_real_distribution<double> start(0.0, step);
  const double u = start(rng);

  ParticleSet out;
  out.states.reserve(count);
  std::size_t source = 0;
  double cumulative = particles.weights[0] / total;
  for (std::size_t i = 0; i < count; ++i) {
    const double position = u + static_cast<double>(i) * step;
    while (position >= cumulative && source + 1 < particles.size()) {
      ++source;
      cumulative += particles.weights[source] / total;
    }
    out.states.push_back(particles.states[source]);
  }
  out.weights.assign(count, step);
  return out;
}

inline ParticleSet resample(const ParticleSet& particles, Rng& rng) {
  return resample(particles, rng, particles.size());
}

/// Square template image; element (row, col) is template pixel (v, u).
using TemplateImage = Eigen::MatrixXd;

/// Bilinear sample at pixel-index coordinates, clamped to the frame edge.
inline double sample_bilinear(const GrayFrame& frame, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(frame.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(frame.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, frame.width() - 1);
  const int y1 = std::min(y0 + 1, frame.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * frame.at(x0, y0) + fx * frame.at(x1, y0);
  const double bottom = (1.0 - fx) * frame.at(x0, y1) + fx * frame.at(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

/// Crops the region described by `state` and resamples it to template_side^2.
///
/// Pixel (i, j) of the frame covers [i, i+1) x [j, j+1). Template pixel (u, v)
/// sits at offset (u + 1/2 - S/2, v + 1/2 - S/2) from the template center and
/// maps to A * offset + (tx, ty); the frame is sampled there bilinearly.
inline TemplateImage crop_warp(const GrayFrame& frame, const AffineState& state, int template_side) {
  if (template_side < 1) throw InvalidInput("template side must be >= 1");
  if (!state.valid()) throw InvalidState("affine state has non-positive scale/aspect or non-finite entries");
  const Eigen::Matrix2d a = affine_linear_part(state);
  if (std::abs(a.determinant()) < 1e-9) throw InvalidState("affine map is degenerate");

  const double half = template_side / 2.0;
  TemplateImage out(template_side, template_side);
  for (int u = 0; u < template_side; ++u) {
    const double ou = u + 0.5 - half;
    for (int v = 0; v < template_side; ++v) {
      const double ov = v + 0.5 - half;
      const double fx = a(0, 0) * ou + a(0, 1) * ov + state.tx;
      const double fy = a(1, 0) * ou + a(1, 1) * ov + state.ty;
      out(v, u) = sample_bilinear(frame, fx - 0.5, fy - 0.5);
    }
  }
  return out;
}

/// Splits a template into non-overlapping patch_side^2 patches, row-major over the
/// patch grid; each patch is vectorized column-major.
inline std::vector<Eigen::VectorXd> partition(const TemplateImage& tmpl, int patch_side) {
  if (patch_side < 1 || tmpl.rows() != tmpl.cols() || tmpl.rows() % patch_side != 0)
    throw InvalidInput("template side " + std::to_string(tmpl.rows()) +
                       " is not divisible by patch side " + std::to_string(patch_side));
  const int grid = static_cast<int>(tmpl.rows()) / patch_side;
  std::vector<Eigen::VectorXd> patches;
  patches.reserve(static_cast<std::size_t>(grid) * grid);
  for (int gr = 0; gr < grid; ++gr) {
    for (int gc = 0; gc < grid; ++gc) {
      Eigen::MatrixXd block = tmpl.block(gr * patch_side, gc * patch_side, patch_side, patch_side);
      patches.emplace_back(Eigen::Map<const Eigen::VectorXd>(block.data(), block.size()));
    }
  }
  return patches;
}

/// Inverse of partition.
inline TemplateImage unpartition(const std::vector<Eigen::VectorXd>& patches, int patch_side) {
  const int grid = static_cast<int>(std::lround(std::sqrt(static_cast<double>(patches.size()))));
  if (grid * grid != static_cast<int>(patches.size()) || patch_side < 1)
    throw InvalidInput("patch count is not a square grid");
  TemplateImage tmpl(grid * patch_side, grid * patch_side);
  for (int p = 0; p < static_cast<int>(patches.size()); ++p) {
    if (patches[static_cast<std::size_t>(p)].size() != patch_side * patch_side)
      throw InvalidInput("patch has wrong length");
    tmpl.block((p / grid) * patch_side, (p % grid) * patch_side, patch_side, patch_side) =
        Eigen::Map<const Eigen::MatrixXd>(patches[static_cast<std::size_t>(p)].data(), patch_side,
                                          patch_side);
  }
  return tmpl;
}

/// Axis-aligned bounding box of the four warped template corners.
inline Box state_to_box(const AffineState& state, int template_side) {
  const Eigen::Matrix2d a = affine_linear_part(state);
  const double half = template_side / 2.0;
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  for (double cu : {-half, half}) {
    for (double cv : {-half, half}) {
      const double x = a(0, 0) * cu + a(0, 1) * cv + state.tx;
      const double y = a(1, 0) * cu + a(1, 1) * cv + state.ty;
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  }
  return {min_x, min_y, max_x - min_x, max_y - min_y};
}

}  // namespace pjs
