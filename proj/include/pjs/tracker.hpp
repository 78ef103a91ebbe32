#pragma once

// Patchwise joint-sparse tracker: one particle-filter step per frame.
//
//   1. propagate particles through the random-walk motion model
//   2. for every particle: warp + crop the candidate, split it into patches,
//      code each patch jointly with the same patch of the last k best targets
//      (SOMP or M-FOCUSS), and score -sum_i ||y_i - D_i c_i||^2 using only the
//      coefficients of the patch's own template
//   3. keep the highest-scoring candidate, resample
//   4. per-patch occlusion detection on the winner, then write its visible
//      patches into the dictionary

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pjs/appearance.hpp"
#include "pjs/motion.hpp"
#include "pjs/occlusion.hpp"
#include "pjs/parallel.hpp"
#include "pjs/sparse_solvers.hpp"

namespace pjs {

enum class SolverKind { kSomp, kMFocuss };

struct TrackerConfig {
  int template_side = 32;
  int patch_side = 8;
  int n_targets = 10;
  int n_particles = 600;
  int sparsity = 4;         // L, SOMP only
  double lambda = 0.001;    // gamma, M-FOCUSS and occlusion coding
  int group_size = 4;       // k previous best targets coded jointly
  TransitionNoise noise;
  SolverKind solver = SolverKind::kSomp;
  BetaHyper beta;
  std::uint64_t seed = 0;
  int init_shift_px = 2;
  ReplacementBias replacement = ReplacementBias::kRecent;
  double mfocuss_tol = 1e-6;
  int mfocuss_max_iter = 100;
  /// Optional per-patch error scale sigma_i (errors are divided by sigma_i^2).
  /// Empty means equal variance.
  std::vector<double> patch_sigma;
  /// Workers for candidate evaluation; 0 picks default_worker_count().
  int threads = 0;

  PatchGrid grid() const { return {template_side, patch_side}; }
  MFocussOptions coding() const { return {lambda, mfocuss_tol, mfocuss_max_iter, false}; }

  void validate() const {
    grid().validate();
    if (n_targets < 2) throw InvalidInput("n_targets must be >= 2");
    if (n_particles < 1) throw InvalidInput("n_particles must be >= 1");
    if (sparsity < 1) throw InvalidInput("sparsity must be >= 1");
    if (sparsity > std::min(grid().patch_dim(), n_targets * grid().patch_count()))
      throw InvalidInput("sparsity exceeds the dictionary size");
    if (!(lambda > 0.0)) throw InvalidInput("lambda must be > 0");
    if (group_size < 0) throw InvalidInput("group_size must be >= 0");
    for (double s : noise.sigma)
      if (!(s >= 0.0)) throw InvalidInput("noise sigma must be >= 0");
    if (!(beta.a > 1 && beta.b > 1 && beta.c > 1 && beta.d > 1))
      throw InvalidInput("beta hyperparameters must exceed 1");
    if (init_shift_px < 0) throw InvalidInput("init_shift_px must be >= 0");
    if (!(mfocuss_tol > 0.0) || mfocuss_max_iter < 1) throw InvalidInput("bad M-FOCUSS stopping rule");
    if (!patch_sigma.empty()) {
      if (static_cast<int>(patch_sigma.size()) != grid().patch_count())
        throw InvalidInput("patch_sigma needs one entry per patch");
      for (double s : patch_sigma)
        if (!(s > 0.0)) throw InvalidInput("patch_sigma entries must be > 0");
    }
    if (threads < 0) throw InvalidInput("threads must be >= 0");
  }
};

struct CandidateScore {
  double log_likelihood = 0.0;
  std::vector<double> patch_errors;  // ||y_i - D_i c_i||^2, unscaled
};

/// Joint-sparse code of the candidate patch (last column of its group), per the solver.
inline Vector candidate_code(const Dictionary& dict, const SignalGroup& group, const TrackerConfig& config) {
  if (config.solver == SolverKind::kSomp)
    return somp(dict, group, config.sparsity).coefficients.rightCols(1);
  return mfocuss(dict, group, config.coding()).coefficients.rightCols(1);
}

inline CandidateScore candidate_loglik(const AppearanceDictionary& dict, const TargetHistory& history,
                                       const std::vector<Vector>& patches, const TrackerConfig& config) {
  if (static_cast<int>(patches.size()) != dict.patches())
    throw InvalidInput("candidate has " + std::to_string(patches.size()) + " patches, expected " +
                       std::to_string(dict.patches()));
  CandidateScore score;
  score.patch_errors.reserve(patches.size());
  const Index n = dict.targets();
  for (int i = 0; i < dict.patches(); ++i) {
    const Vector& y = patches[static_cast<std::size_t>(i)];
    const Vector c = candidate_code(dict.dictionary(), group_signals(history, y, i), config);
    const Index begin = dict.template_begin(i);
    const double err = (y - dict.atoms().middleCols(begin, n) * c.segment(begin, n)).squaredNorm();
    score.patch_errors.push_back(err);
    const double scale = config.patch_sigma.empty() ? 1.0 : config.patch_sigma[static_cast<std::size_t>(i)];
    score.log_likelihood -= err / (scale * scale);
  }
  return score;
}

struct FrameResult {
  int frame = 0;  // 1-based
  AffineState best_state;
  Box best_box;
  double log_likelihood = 0.0;
  std::vector<bool> occlusion_mask;
  std::vector<double> occlusion_probability;
  std::vector<double> patch_errors;
  /// Every candidate was unusable; weights fell back to uniform.
  bool degenerate_likelihoods = false;
};

/// Everything the tracker carries from one frame to the next.
struct TrackerState {
  ParticleSet particles;
  AppearanceDictionary dict;
  TargetHistory history;
  std::vector<OcclusionChain> chains;
  Rng rng;
  int frame = 1;
  int warmup_remaining = 0;  // frames that still overwrite initial slots oldest-first
};

inline std::vector<Vector> extract_patches(const GrayFrame& frame, const AffineState& state,
                                           const PatchGrid& grid) {
  return partition(crop_warp(frame, state, grid.template_side), grid.patch_side);
}

/// Tracker state for frame 1 from the ground-truth box.
inline TrackerState init_tracker(const GrayFrame& first_frame, const Box& initial_box,
                                 const TrackerConfig& config) {
  config.validate();
  if (!(initial_box.w > 0.0 && initial_box.h > 0.0)) throw InvalidInput("initial box must have w, h > 0");
  const PatchGrid grid = config.grid();
  const AffineState start = AffineState::from_box(initial_box, grid.template_side);
  Rng rng(config.seed);
  AppearanceDictionary dict =
      init_dictionary(first_frame, start, grid, config.n_targets, config.init_shift_px, rng);
  TargetHistory history(config.group_size);
  history.push(extract_patches(first_frame, start, grid));
  return TrackerState{ParticleSet::replicate(start, static_cast<std::size_t>(config.n_particles)),
                      std::move(dict),
                      std::move(history),
                      std::vector<OcclusionChain>(static_cast<std::size_t>(grid.patch_count()),
                                                  OcclusionChain(config.beta)),
                      std::move(rng),
                      1,
                      config.n_targets - 1};
}

/// Frame-1 row: the given box, perfect score, nothing occluded.
inline FrameResult initial_result(const TrackerState& state, const TrackerConfig& config) {
  FrameResult r;
  r.frame = 1;
  r.best_state = state.particles.states.front();
  r.best_box = state_to_box(r.best_state, config.template_side);
  const auto m = static_cast<std::size_t>(config.grid().patch_count());
  r.occlusion_mask.assign(m, false);
  r.occlusion_probability.assign(m, 0.0);
  r.patch_errors.assign(m, 0.0);
  return r;
}

/// Occlusion detection on the committed target followed by the dictionary write.
inline void update_appearance(TrackerState& state, const std::vector<Vector>& target,
                              const TrackerConfig& config, FrameResult& result) {
  const int m = state.dict.patches();
  result.occlusion_mask.assign(static_cast<std::size_t>(m), false);
  result.occlusion_probability.assign(static_cast<std::size_t>(m), 0.0);
  const MFocussOptions coding = config.coding();
  for (int i = 0; i < m; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const PatchOcclusion occ =
        detect_patch_occlusion(state.dict, target[idx], i, state.chains[idx], coding);
    result.occlusion_mask[idx] = occ.occluded;
    result.occlusion_probability[idx] = occ.probability;
  }

  if (state.warmup_remaining > 0) {
    --state.warmup_remaining;
    const bool all_occluded = std::all_of(result.occlusion_mask.begin(), result.occlusion_mask.end(),
                                          [](bool b) { return b; });
    if (!all_occluded)
      state.dict = overwrite_slot(state.dict, state.dict.oldest_slot(), target, result.occlusion_mask);
  } else {
    state.dict = replace_target(state.dict, target, result.occlusion_mask, state.rng, config.replacement);
  }
}

/// Advances the tracker by one frame.
inline FrameResult track_frame(const GrayFrame& frame, TrackerState& state, const TrackerConfig& config) {
  const PatchGrid grid = config.grid();
  state.particles = propagate(state.particles, config.noise, state.rng);

  const std::size_t count = state.particles.size();
  std::vector<double> loglik(count, -std::numeric_limits<double>::infinity());
  std::vector<std::vector<double>> errors(count);
  const int workers = config.threads > 0 ? config.threads : default_worker_count();
  // Read-only view of the dictionary/history; each index writes only its own slot.
  parallel_for(count, workers, [&](std::size_t i) {
    const AffineState& s = state.particles.states[i];
    if (!s.valid() || std::abs(affine_linear_part(s).determinant()) < 1e-9) return;
    CandidateScore score = candidate_loglik(state.dict, state.history, extract_patches(frame, s, grid), config);
    loglik[i] = score.log_likelihood;
    errors[i] = std::move(score.patch_errors);
  });

  FrameResult result;
  result.frame = ++state.frame;
  std::size_t best = 0;
  for (std::size_t i = 1; i < count; ++i)
    if (loglik[i] > loglik[best]) best = i;
  const double top = loglik[best];

  if (std::isfinite(top)) {
    for (std::size_t i = 0; i < count; ++i) state.particles.weights[i] = std::exp(loglik[i] - top);
  } else {
    result.degenerate_likelihoods = true;
    std::fill(state.particles.weights.begin(), state.particles.weights.end(), 1.0);
  }
  double total = 0.0;
  for (double w : state.particles.weights) total += w;
  for (double& w : state.particles.weights) w /= total;

  result.best_state = state.particles.states[best];
  result.best_box = state_to_box(result.best_state, grid.template_side);
  result.log_likelihood = std::isfinite(top) ? top : -std::numeric_limits<double>::infinity();
  result.patch_errors = errors[best];
  if (result.patch_errors.empty())
    result.patch_errors.assign(static_cast<std::size_t>(grid.patch_count()), 0.0);

  state.particles = resample(state.particles, state.rng);

  if (!result.degenerate_likelihoods) {
    std::vector<Vector> target = extract_patches(frame, result.best_state, grid);
    update_appearance(state, target, config, result);
    state.history.push(std::move(target));
  } else {
    const auto m = static_cast<std::size_t>(grid.patch_count());
    result.occlusion_mask.assign(m, false);
    result.occlusion_probability.assign(m, 0.0);
  }
  return result;
}

/// Runs the tracker over frames 1..count. frame_at(i) returns frame i (0-based).
inline std::vector<FrameResult> track_sequence(const std::function<GrayFrame(std::size_t)>& frame_at,
                                               std::size_t count, const Box& initial_box,
                                               const TrackerConfig& config) {
  std::vector<FrameResult> results;
  if (count == 0) return results;
  results.reserve(count);
  TrackerState state = init_tracker(frame_at(0), initial_box, config);
  results.push_back(initial_result(state, config));
  for (std::size_t t = 1; t < count; ++t) results.push_back(track_frame(frame_at(t), state, config));
  return results;
}

}  // namespace pjs
