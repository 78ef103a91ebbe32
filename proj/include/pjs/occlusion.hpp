#pragma once

// Per-patch occlusion detection.
//
// Each patch carries a two-state Markov chain (0 = visible, 1 = occluded).
// Its transition probabilities
//   mu  = P(occluded -> visible),  eta = P(visible -> occluded)
// are MAP estimates under Beta(a, b) and Beta(c, d) priors from the counted
// transitions. The posterior combines the chain prior with reconstruction
// likelihoods of the patch by its own template versus all other templates.

#include <cmath>
#include <cstdint>
#include <vector>

#include "pjs/appearance.hpp"

namespace pjs {

struct BetaHyper {
  double a = 4.0;
  double b = 8.0;
  double c = 8.0;
  double d = 4.0;
};

struct TransitionEstimate {
  double mu = 0.0;   // leave occlusion
  double eta = 0.0;  // enter occlusion
};

struct OcclusionChain {
  long n_oo = 0;    // occluded -> occluded
  long n_ov = 0;    // occluded -> visible
  long n_vo = 0;    // visible -> occluded
  long n_vv = 0;    // visible -> visible
  BetaHyper hyper;
  std::vector<std::uint8_t> history;

  explicit OcclusionChain(BetaHyper h = {}) : hyper(h) {}

  /// Initial state before any observation is "visible".
  int last_state() const { return history.empty() ? 0 : history.back(); }
  long transitions() const { return n_oo + n_ov + n_vo + n_vv; }
};

inline TransitionEstimate map_transitions(const OcclusionChain& chain) {
  const BetaHyper& h = chain.hyper;
  if (!(h.a > 1.0 && h.b > 1.0 && h.c > 1.0 && h.d > 1.0))
    throw InvalidInput("beta hyperparameters must all exceed 1");
  const double mu_num = h.a - 1.0 + static_cast<double>(chain.n_ov);
  const double eta_num = h.c - 1.0 + static_cast<double>(chain.n_vo);
  return {mu_num / (mu_num + h.b - 1.0 + static_cast<double>(chain.n_oo)),
          eta_num / (eta_num + h.d - 1.0 + static_cast<double>(chain.n_vv))};
}

/// (P(o_t = 0), P(o_t = 1)) given o_{t-1}.
struct StatePair {
  double visible = 0.0;
  double occluded = 0.0;
};

inline StatePair occlusion_prior(int last_state, double mu, double eta) {
  if (!(mu >= 0.0 && mu <= 1.0 && eta >= 0.0 && eta <= 1.0))
    throw InvalidInput("transition probabilities must lie in [0,1]");
  if (last_state == 1) return {mu, 1.0 - mu};
  return {1.0 - eta, eta};
}

/// Squared reconstruction errors of a patch: by its own template (visible
/// hypothesis) and by every other template (occluded hypothesis).
struct ReconstructionErrors {
  double own = 0.0;
  double others = 0.0;
};

inline ReconstructionErrors split_reconstruction_errors(const AppearanceDictionary& dict,
                                                        const Vector& patch, const Vector& code,
                                                        int patch_index) {
  if (patch_index < 0 || patch_index >= dict.patches()) throw InvalidInput("patch index out of range");
  if (code.size() != dict.atoms().cols()) throw InvalidInput("code length must equal the atom count");
  const Index begin = dict.template_begin(patch_index);
  const Index n = dict.targets();
  const Vector own = dict.atoms().middleCols(begin, n) * code.segment(begin, n);
  const Vector full = dict.atoms() * code;
  return {(patch - own).squaredNorm(), (patch - (full - own)).squaredNorm()};
}

/// (L_visible, L_occluded) = (exp(-own error), exp(-other-template error)).
inline StatePair occlusion_likelihoods(const AppearanceDictionary& dict, const Vector& patch,
                                       const Vector& code, int patch_index) {
  const auto err = split_reconstruction_errors(dict, patch, code, patch_index);
  return {std::exp(-err.own), std::exp(-err.others)};
}

/// P(o = 1 | evidence), normalizing likelihood x prior over the two states.
inline double occlusion_posterior(const StatePair& likelihood, const StatePair& prior) {
  if (!(likelihood.visible >= 0.0 && likelihood.occluded >= 0.0))
    throw InvalidInput("likelihoods must be non-negative");
  const double occ = likelihood.occluded * prior.occluded;
  const double total = occ + likelihood.visible * prior.visible;
  if (!(total > 0.0)) throw DegenerateError("both occlusion hypotheses have zero evidence");
  return occ / total;
}

inline void update_chain(OcclusionChain& chain, int new_state) {
  const int last = chain.last_state();
  if (last == 1) {
    new_state == 1 ? ++chain.n_oo : ++chain.n_ov;
  } else {
    new_state == 1 ? ++chain.n_vo : ++chain.n_vv;
  }
  chain.history.push_back(static_cast<std::uint8_t>(new_state == 1));
}

struct PatchOcclusion {
  double probability = 0.0;
  bool occluded = false;
};

/// One step of the per-patch occlusion update for a committed best candidate:
/// l1-code the patch against the whole dictionary, score both hypotheses,
/// combine with the MAP chain prior, threshold at 1/2 and record the state.
inline PatchOcclusion detect_patch_occlusion(const AppearanceDictionary& dict, const Vector& patch,
                                             int patch_index, OcclusionChain& chain,
                                             const MFocussOptions& coding) {
  const SparseCode code = sparse_code_single(dict.dictionary(), patch, coding);
  const StatePair likelihood = occlusion_likelihoods(dict, patch, code.coefficients.col(0), patch_index);
  const TransitionEstimate t = map_transitions(chain);
  const StatePair prior = occlusion_prior(chain.last_state(), t.mu, t.eta);
  PatchOcclusion out;
  out.probability = occlusion_posterior(likelihood, prior);
  // Visible when P(o = 0) >= 1/2.
  out.occluded = (1.0 - out.probability) < 0.5;
  update_chain(chain, out.occluded ? 1 : 0);
  return out;
}

}  // namespace pjs
