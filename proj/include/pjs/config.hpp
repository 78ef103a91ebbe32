#pragma once

// TrackerConfig <-> flat JSON object. Keys mirror the TrackerConfig fields;
// beta hyperparameters are beta_a..beta_d and the motion noise is a 6-array.

#include <set>
#include <string>

#include <json.hpp>

#include "pjs/tracker.hpp"

namespace pjs {

inline std::string solver_name(SolverKind kind) { return kind == SolverKind::kSomp ? "pjs-s" : "pjs-m"; }

inline SolverKind parse_solver(const std::string& name) {
  if (name == "pjs-s") return SolverKind::kSomp;
  if (name == "pjs-m") return SolverKind::kMFocuss;
  throw InvalidInput("unknown solver \"" + name + "\" (expected pjs-s or pjs-m)");
}

inline nlohmann::json config_to_json(const TrackerConfig& c) {
  nlohmann::json j;
  j["template_side"] = c.template_side;
  j["patch_side"] = c.patch_side;
  j["n_targets"] = c.n_targets;
  j["n_particles"] = c.n_particles;
  j["sparsity"] = c.sparsity;
  j["lambda"] = c.lambda;
  j["group_size"] = c.group_size;
  j["noise"] = c.noise.sigma;
  j["solver"] = solver_name(c.solver);
  j["beta_a"] = c.beta.a;
  j["beta_b"] = c.beta.b;
  j["beta_c"] = c.beta.c;
  j["beta_d"] = c.beta.d;
  j["seed"] = c.seed;
  j["init_shift_px"] = c.init_shift_px;
  j["replacement"] = c.replacement == ReplacementBias::kRecent ? "recent" : "old";
  j["mfocuss_tol"] = c.mfocuss_tol;
  j["mfocuss_max_iter"] = c.mfocuss_max_iter;
  j["patch_sigma"] = c.patch_sigma;
  j["threads"] = c.threads;
  return j;
}

/// Applies the keys present in `j` on top of `base`. Unknown keys and
/// wrongly typed values are rejected with the key named in the message.
inline TrackerConfig config_from_json(const nlohmann::json& j, TrackerConfig base = {}) {
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "template_side") base.template_side = value.get<int>();
      else if (key == "patch_side") base.patch_side = value.get<int>();
      else if (key == "n_targets") base.n_targets = value.get<int>();
      else if (key == "n_particles") base.n_particles = value.get<int>();
      else if (key == "sparsity") base.sparsity = value.get<int>();
      else if (key == "lambda") base.lambda = value.get<double>();
      else if (key == "group_size") base.group_size = value.get<int>();
      else if (key == "noise") base.noise.sigma = value.get<std::array<double, AffineState::kDims>>();
      else if (key == "solver") base.solver = parse_solver(value.get<std::string>());
      else if (key == "beta_a") base.beta.a = value.get<double>();
      else if (key == "beta_b") base.beta.b = value.get<double>();
      else if (key == "beta_c") base.beta.c = value.get<double>();
      else if (key == "beta_d") base.beta.d = value.get<double>();
      else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else if (key == "init_shift_px") base.init_shift_px = value.get<int>();
      else if (key == "replacement") {
        const auto s = value.get<std::string>();
        if (s == "recent") base.replacement = ReplacementBias::kRecent;
        else if (s == "old") base.replacement = ReplacementBias::kOld;
        else throw InvalidInput("replacement must be \"recent\" or \"old\"");
      }
      else if (key == "mfocuss_tol") base.mfocuss_tol = value.get<double>();
      else if (key == "mfocuss_max_iter") base.mfocuss_max_iter = value.get<int>();
      else if (key == "patch_sigma") base.patch_sigma = value.get<std::vector<double>>();
      else if (key == "threads") base.threads = value.get<int>();
      else throw InvalidInput("unknown config key \"" + key + "\"");
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput("bad value for config key \"" + key + "\": " + e.what());
    }
  }
  return base;
}

}  // namespace pjs
