#pragma once

// Patch-template appearance dictionary.
//
// The dictionary holds n past targets, each cut into m patches. Column
// patch * n + slot stores patch `patch` of the target in `slot`, so the n
// columns of one patch template are contiguous:
//
//   D = [ d(0,0) .. d(0,n-1) | d(1,0) .. d(1,n-1) | ... | d(m-1,0) .. d(m-1,n-1) ]

#include <cmath>
#include <deque>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "pjs/motion.hpp"
#include "pjs/sparse_solvers.hpp"

namespace pjs {

struct PatchGrid {
  int template_side = 32;
  int patch_side = 8;

  int cells_per_side() const { return template_side / patch_side; }
  int patch_count() const { return cells_per_side() * cells_per_side(); }
  int patch_dim() const { return patch_side * patch_side; }
  void validate() const {
    if (patch_side < 1 || template_side < patch_side || template_side % patch_side != 0)
      throw InvalidInput("template side " + std::to_string(template_side) +
                         " must be a positive multiple of patch side " + std::to_string(patch_side));
  }
};

/// Unit-l2 copy of a patch. An all-zero patch has no direction and maps to the
/// constant unit vector.
inline Vector normalize_atom(const Vector& patch) {
  const double norm = patch.norm();
  if (norm > 0.0) return patch / norm;
  return Vector::Constant(patch.size(), 1.0 / std::sqrt(static_cast<double>(patch.size())));
}

/// Which slots the replacement draw favours.
enum class ReplacementBias { kRecent, kOld };

class AppearanceDictionary {
 public:
  /// `ages[slot]` is the recency rank of the slot: 1 = oldest, n = newest.
  AppearanceDictionary(PatchGrid grid, int targets, Matrix atoms, std::vector<int> ages)
      : grid_(grid), targets_(targets), dict_(std::move(atoms)), ages_(std::move(ages)) {
    grid_.validate();
    if (targets_ < 1) throw InvalidInput("dictionary needs at least one target");
    if (dict_.signal_dim() != grid_.patch_dim() || dict_.atom_count() != targets_ * grid_.patch_count())
      throw InvalidInput("atom matrix does not match the patch grid");
    std::vector<int> sorted = ages_;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expected(static_cast<std::size_t>(targets_));
    std::iota(expected.begin(), expected.end(), 1);
    if (sorted != expected) throw InvalidInput("ages must be a permutation of 1..n");
  }

  const Dictionary& dictionary() const { return dict_; }
  const Matrix& atoms() const { return dict_.atoms(); }
  const PatchGrid& grid() const { return grid_; }
  int targets() const { return targets_; }
  int patches() const { return grid_.patch_count(); }
  const std::vector<int>& ages() const { return ages_; }

  Index column(int patch, int slot) const { return static_cast<Index>(patch) * targets_ + slot; }
  /// First column of patch template `patch`; the template spans targets() columns.
  Index template_begin(int patch) const { return column(patch, 0); }
  std::vector<Index> template_indices(int patch) const {
    std::vector<Index> idx(static_cast<std::size_t>(targets_));
    std::iota(idx.begin(), idx.end(), template_begin(patch));
    return idx;
  }
  auto atom(int patch, int slot) const { return dict_.atoms().col(column(patch, slot)); }

  int oldest_slot() const {
    return static_cast<int>(std::find(ages_.begin(), ages_.end(), 1) - ages_.begin());
  }

  friend bool operator==(const AppearanceDictionary& a, const AppearanceDictionary& b) {
    return a.grid_.template_side == b.grid_.template_side && a.grid_.patch_side == b.grid_.patch_side &&
           a.targets_ == b.targets_ && a.ages_ == b.ages_ && a.atoms() == b.atoms();
  }

 private:
  PatchGrid grid_;
  int targets_;
  Dictionary dict_;
  std::vector<int> ages_;
};

/// Builds the initial dictionary from the first frame. The last slot (newest)
/// holds the given target; every other slot holds the target re-extracted after
/// shifting the state by an integer offset with each axis drawn uniformly from
/// {-shift_px..-1, 1..shift_px}. shift_px = 0 repeats the unshifted target.
inline AppearanceDictionary init_dictionary(const GrayFrame& frame, const AffineState& state,
                                            const PatchGrid& grid, int targets, int shift_px, Rng& rng) {
  grid.validate();
  if (targets < 2) throw InvalidInput("dictionary needs at least two targets");
  if (shift_px < 0) throw InvalidInput("shift must be non-negative");

  Matrix atoms(grid.patch_dim(), static_cast<Index>(targets) * grid.patch_count());
  auto store = [&](int slot, const AffineState& s) {
    const auto patches = partition(crop_warp(frame, s, grid.template_side), grid.patch_side);
    for (int p = 0; p < grid.patch_count(); ++p)
      atoms.col(static_cast<Index>(p) * targets + slot) = normalize_atom(patches[static_cast<std::size_t>(p)]);
  };

  std::uniform_int_distribution<int> pick(0, std::max(0, 2 * shift_px - 1));
  auto offset = [&]() -> int {
    if (shift_px == 0) return 0;
    const int k = pick(rng);
    return k < shift_px ? k - shift_px : k - shift_px + 1;
  };
  for (int slot = 0; slot + 1 < targets; ++slot) {
    AffineState shifted = state;
    shifted.tx += offset();
    shifted.ty += offset();
    store(slot, shifted);
  }
  store(targets - 1, state);

  std::vector<int> ages(static_cast<std::size_t>(targets));
  std::iota(ages.begin(), ages.end(), 1);
  return AppearanceDictionary(grid, targets, std::move(atoms), std::move(ages));
}

/// Draws the slot to overwrite with probability proportional to its recency
/// rank (kRecent: newest weight n, oldest weight 1) or the reverse (kOld).
inline int choose_replacement_slot(const AppearanceDictionary& dict, Rng& rng,
                                   ReplacementBias bias = ReplacementBias::kRecent) {
  std::vector<double> weights;
  weights.reserve(dict.ages().size());
  for (int age : dict.ages())
    weights.push_back(bias == ReplacementBias::kRecent ? age : dict.targets() + 1 - age);
  std::discrete_distribution<int> draw(weights.begin(), weights.end());
  return draw(rng);
}

/// Overwrites slot `slot` with the normalized new patches, skipping patches
/// flagged in `occluded`, and marks the slot newest.
inline AppearanceDictionary overwrite_slot(const AppearanceDictionary& dict, int slot,
                                           const std::vector<Vector>& new_patches,
                                           const std::vector<bool>& occluded) {
  const int m = dict.patches();
  if (static_cast<int>(new_patches.size()) != m || static_cast<int>(occluded.size()) != m)
    throw InvalidInput("expected " + std::to_string(m) + " patches and mask entries");
  if (slot < 0 || slot >= dict.targets()) throw InvalidInput("slot out of range");

  Matrix atoms = dict.atoms();
  for (int p = 0; p < m; ++p) {
    if (occluded[static_cast<std::size_t>(p)]) continue;
    const Vector& patch = new_patches[static_cast<std::size_t>(p)];
    if (patch.size() != dict.grid().patch_dim()) throw InvalidInput("patch has wrong length");
    atoms.col(dict.column(p, slot)) = normalize_atom(patch);
  }

  std::vector<int> ages = dict.ages();
  const int old_rank = ages[static_cast<std::size_t>(slot)];
  for (int& age : ages)
    if (age > old_rank) --age;
  ages[static_cast<std::size_t>(slot)] = dict.targets();
  return AppearanceDictionary(dict.grid(), dict.targets(), std::move(atoms), std::move(ages));
}

/// Randomized replacement of one past target by the new one. A fully occluded
/// target leaves the dictionary untouched and consumes no random draw.
inline AppearanceDictionary replace_target(const AppearanceDictionary& dict,
                                           const std::vector<Vector>& new_patches,
                                           const std::vector<bool>& occluded, Rng& rng,
                                           ReplacementBias bias = ReplacementBias::kRecent) {
  if (static_cast<int>(occluded.size()) != dict.patches())
    throw InvalidInput("occlusion mask length must equal the patch count");
  if (std::all_of(occluded.begin(), occluded.end(), [](bool b) { return b; })) return dict;
  return overwrite_slot(dict, choose_replacement_slot(dict, rng, bias), new_patches, occluded);
}

/// The last `capacity` best-candidate patch lists, oldest first.
class TargetHistory {
 public:
  explicit TargetHistory(int capacity) : capacity_(capacity) {
    if (capacity_ < 0) throw InvalidInput("history capacity must be >= 0");
  }

  void push(std::vector<Vector> patches) {
    if (capacity_ == 0) return;
    if (!entries_.empty() && patches.size() != entries_.front().size())
      throw InvalidInput("history entries must have the same patch count");
    entries_.push_back(std::move(patches));
    while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
  }

  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  const std::deque<std::vector<Vector>>& entries() const { return entries_; }

 private:
  int capacity_;
  std::deque<std::vector<Vector>> entries_;
};

/// [history patches (oldest first) | candidate] for one patch index.
inline SignalGroup group_signals(const TargetHistory& history, const Vector& candidate_patch,
                                 int patch_index) {
  Matrix y(candidate_patch.size(), history.size() + 1);
  Index col = 0;
  for (const auto& entry : history.entries()) {
    if (patch_index < 0 || patch_index >= static_cast<int>(entry.size()))
      throw InvalidInput("patch index out of range");
    const Vector& past = entry[static_cast<std::size_t>(patch_index)];
    if (past.size() != candidate_patch.size()) throw InvalidInput("history patch has wrong length");
    y.col(col++) = past;
  }
  y.col(col) = candidate_patch;
  return SignalGroup(std::move(y));
}

/// Debug dump: "M N" header line, then M rows of N space-separated values.
inline void write_dictionary_snapshot(std::ostream& os, const AppearanceDictionary& dict) {
  const Matrix& a = dict.atoms();
  os << a.rows() << ' ' << a.cols() << '\n' << std::setprecision(17);
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index c = 0; c < a.cols(); ++c) os << (c ? " " : "") << a(r, c);
    os << '\n';
  }
}

}  // namespace pjs
