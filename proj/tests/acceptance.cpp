// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if any gating criterion fails.
//
// The dataset check runs only when PJS_OTB_ROOT points at a directory holding
// the ten benchmark sequences (board david skating1 crossing dollar faceocc2
// stone sylv trellis walking2, matched case-insensitively, sylv also as
// sylvester). It never affects the exit status.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <numeric>
#include <tuple>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pjs/evalkit.hpp"
#include "pjs/image_io.hpp"
#include "pjs/occlusion.hpp"
#include "pjs/run_io.hpp"
#include "pjs/synth.hpp"
#include "pjs/tracker.hpp"
#include "test_support.hpp"

namespace {

using namespace pjs;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const Outcome& o, bool gating = true) {
  std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  if (!o.pass && gating) ++g_failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome solver_monotonicity() {
  const auto start = Clock::now();
  std::mt19937_64 rng(100);
  int violations = 0;
  long steps = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int instance = 0; instance < 100; ++instance) {
    const Dictionary d = testing::random_dictionary(64, 160, rng);
    const Matrix y = testing::gaussian_matrix(64, 5, rng);
    MFocussOptions opt;
    opt.lambda = 0.001;
    opt.record_objective = true;
    const SparseCode code = mfocuss(d, SignalGroup(y), opt);
    for (std::size_t t = 1; t < code.objective_trace.size(); ++t, ++steps) {
      const double rise = code.objective_trace[t] - code.objective_trace[t - 1];
      worst = std::max(worst, rise);
      if (rise > 1e-10) ++violations;
    }
  }
  const double secs = seconds_since(start);
  return {violations == 0 && secs < 30.0,
          fmt("%ld iterations, %d increases > 1e-10, max change %.3g, %.1f s (limit 30 s)", steps, violations, worst,
              secs)};
}

Outcome single_column_equivalence() {
  std::mt19937_64 rng(200);
  const double lambda = 0.01;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Dictionary d = testing::random_dictionary(4, 5, rng);
    const Vector y = testing::gaussian_matrix(4, 1, rng).col(0);
    MFocussOptions opt;
    opt.lambda = lambda;
    const Vector c = sparse_code_single(d, y, opt).coefficients.col(0);
    const Vector oracle = testing::lasso_cd(d.atoms(), y, lambda);
    worst = std::max(worst, std::abs(testing::lasso_objective(d.atoms(), y, c, lambda) -
                                     testing::lasso_objective(d.atoms(), y, oracle, lambda)));
  }
  return {worst <= 1e-3, fmt("50 problems 4x5, lambda 0.01, max objective gap %.3g (tol 1e-3)", worst)};
}

Outcome somp_recovery() {
  std::mt19937_64 rng(300);
  int support_failures = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Dictionary d(testing::random_orthonormal(8, rng));
    std::vector<Index> rows(8);
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    std::vector<Index> support{std::min(rows[0], rows[1]), std::max(rows[0], rows[1])};
    Matrix c = Matrix::Zero(8, 3);
    for (Index r : support) c.row(r) = testing::gaussian_matrix(1, 3, rng);
    if (somp(d, SignalGroup(d.atoms() * c), 2).active_rows != support) ++support_failures;
  }
  int argmax_failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Dictionary d = testing::random_dictionary(16, 48, rng);
    const Matrix y = testing::gaussian_matrix(16, 4, rng);
    Index expected = 0;
    double best = -1.0;
    for (Index j = 0; j < d.atom_count(); ++j) {
      const double s = (y.transpose() * d.atoms().col(j)).squaredNorm();
      if (s > best) {
        best = s;
        expected = j;
      }
    }
    if (somp(d, SignalGroup(y), 1).active_rows != std::vector<Index>{expected}) ++argmax_failures;
  }
  return {support_failures == 0 && argmax_failures == 0,
          fmt("support failures %d/50, L=1 argmax mismatches %d/100", support_failures, argmax_failures)};
}

Outcome map_closed_form() {
  std::mt19937_64 rng(400);
  std::uniform_real_distribution<double> hyper(1.2, 10.0);
  std::uniform_int_distribution<int> length(0, 80);
  std::bernoulli_distribution flip(0.35);
  double worst = 0.0;
  const int g = 1000;
  std::vector<double> grid(g);
  for (int i = 0; i < g; ++i) grid[std::size_t(i)] = (i + 1) / (g + 1.0);
  for (int set = 0; set < 20; ++set) {
    OcclusionChain chain({hyper(rng), hyper(rng), hyper(rng), hyper(rng)});
    const int n = length(rng);
    for (int i = 0; i < n; ++i) update_chain(chain, flip(rng) ? 1 - chain.last_state() : chain.last_state());
    const TransitionEstimate closed = map_transitions(chain);

    // Log posterior from the raw state sequence, maximized on the full 2-D grid.
    int prev = 0;
    double ov = 0, oo = 0, vo = 0, vv = 0;
    for (std::uint8_t s : chain.history) {
      (prev ? (s ? oo : ov) : (s ? vo : vv)) += 1;
      prev = s;
    }
    const BetaHyper& h = chain.hyper;
    double best = -std::numeric_limits<double>::infinity(), bmu = 0, beta = 0;
    for (double mu : grid) {
      const double mu_term = (h.a - 1 + ov) * std::log(mu) + (h.b - 1 + oo) * std::log(1 - mu);
      for (double eta : grid) {
        const double v = mu_term + (h.c - 1 + vo) * std::log(eta) + (h.d - 1 + vv) * std::log(1 - eta);
        if (v > best) {
          best = v;
          bmu = mu;
          beta = eta;
        }
      }
    }
    worst = std::max({worst, std::abs(closed.mu - bmu), std::abs(closed.eta - beta)});
  }
  const TransitionEstimate zero = map_transitions(OcclusionChain(BetaHyper{4, 8, 8, 4}));
  const bool exact = zero.mu == 0.3 && zero.eta == 0.7;
  return {worst <= 2e-3 && exact, fmt("20 counter sets, max |closed - grid| %.3g (tol 2e-3); zero counts mu=%.17g "
                                      "eta=%.17g",
                                      worst, zero.mu, zero.eta)};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(500);
  std::uniform_int_distribution<int> pos(0, 40), size(1, 30);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Box a{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
    const Box b{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
    long inter = 0, uni = 0;
    for (int y = 0; y < 72; ++y)
      for (int x = 0; x < 72; ++x) {
        const bool in_a = x >= a.x && x < a.x + a.w && y >= a.y && y < a.y + a.h;
        const bool in_b = x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
        inter += in_a && in_b;
        uni += in_a || in_b;
      }
    worst = std::max(worst, std::abs(voc_overlap(a, b) - double(inter) / double(uni)));
  }
  const double c = cle({0, 0, 10, 10}, {3, 4, 10, 10});
  return {worst <= 1e-9 && c == 5.0, fmt("1000 integer boxes, max |voc - pixel count| %.3g; cle(3-4-5) = %.17g", worst, c)};
}

Outcome likelihood_map() {
  const TrackerConfig cfg;
  const Box target{60, 40, 40, 40};
  const AffineState center = AffineState::from_box(target, cfg.template_side);
  constexpr int kSeeds = 20;
  int passing = 0;
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    const GrayFrame frame = make_textured_field(160, 120, seed, 6);
    const TrackerState st = init_tracker(frame, target, cfg);
    bool ok = true;
    for (auto [dx, dy, axis] : {std::tuple{1, 0, "+x"}, {-1, 0, "-x"}, {0, 1, "+y"}, {0, -1, "-y"}}) {
      double prev = std::numeric_limits<double>::infinity();
      if (seed == 1) detail << axis << ":";
      for (int shift : {0, 4, 8}) {
        AffineState s = center;
        s.tx += dx * shift;
        s.ty += dy * shift;
        const double ll =
            candidate_loglik(st.dict, st.history, extract_patches(frame, s, cfg.grid()), cfg).log_likelihood;
        if (!(ll < prev)) ok = false;
        prev = ll;
        if (seed == 1) detail << ' ' << std::setprecision(4) << ll;
      }
      if (seed == 1) detail << "  ";
    }
    passing += ok;
  }
  return {passing == kSeeds, "strictly decreasing on all 4 axes for " + std::to_string(passing) + "/" +
                                 std::to_string(kSeeds) + " textured fields; seed 1 loglik at 0/4/8 px " + detail.str()};
}

struct SyntheticRun {
  std::vector<FrameResult> results;
  std::string csv;
  double seconds = 0.0;
  // Occlusion bookkeeping over the occluded frames.
  int lower_flagged = 0;
  int lower_total = 0;
  int changed_flagged_atoms = 0;
};

SyntheticRun run_synthetic(const SyntheticSequence& seq, const TrackerConfig& cfg) {
  const auto start = Clock::now();
  SyntheticRun run;
  TrackerState st = init_tracker(seq.frames[0], seq.ground_truth[0], cfg);
  run.results.push_back(initial_result(st, cfg));
  const int m = cfg.grid().patch_count();
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    const AppearanceDictionary before = st.dict;
    FrameResult r = track_frame(seq.frames[t], st, cfg);
    if (seq.occluded[t]) {
      for (int p = m / 2; p < m; ++p) {
        ++run.lower_total;
        if (!r.occlusion_mask[std::size_t(p)]) continue;
        ++run.lower_flagged;
        for (Index c : before.template_indices(p))
          if (before.atoms().col(c) != st.dict.atoms().col(c)) ++run.changed_flagged_atoms;
      }
    }
    run.results.push_back(std::move(r));
  }
  std::ostringstream os;
  write_run_csv(os, run.results, m);
  run.csv = os.str();
  run.seconds = seconds_since(start);
  return run;
}

RunReport score(const SyntheticRun& run, const SyntheticSequence& seq) {
  std::vector<Box> boxes;
  for (const auto& r : run.results) boxes.push_back(r.best_box);
  return make_report(boxes, seq.ground_truth);
}

void end_to_end_and_determinism() {
  TrackerConfig cfg;
  cfg.seed = 0;
  cfg.threads = 1;

  const SyntheticSequence translate = make_synthetic(SynthKind::kTranslate);
  const SyntheticRun tr = run_synthetic(translate, cfg);
  const RunReport tr_report = score(tr, translate);

  const SyntheticSequence occlude = make_synthetic(SynthKind::kOcclude);
  const SyntheticRun oc = run_synthetic(occlude, cfg);
  const double flagged = oc.lower_total ? double(oc.lower_flagged) / oc.lower_total : 0.0;

  const double secs = tr.seconds + oc.seconds;
  const bool translate_ok = tr_report.mean_cle <= 3.0 && tr_report.mean_overlap >= 0.6;
  const bool occlude_ok = flagged >= 0.7 && oc.changed_flagged_atoms == 0;
  report("end-to-end synthetic",
         {translate_ok && occlude_ok && secs < 120.0,
          fmt("translate: mean CLE %.3f px (<= 3), mean overlap %.3f (>= 0.6); occlude: %d/%d covered patches "
              "flagged = %.2f (>= 0.70), %d flagged-template atoms changed (== 0); %.1f s (limit 120 s)",
              tr_report.mean_cle, tr_report.mean_overlap, oc.lower_flagged, oc.lower_total, flagged,
              oc.changed_flagged_atoms, secs)});

  const int workers = std::max(4, default_worker_count());
  TrackerConfig parallel = cfg;
  parallel.threads = workers;
  const SyntheticRun again = run_synthetic(translate, parallel);
  const SyntheticRun occ_again = run_synthetic(occlude, parallel);
  const bool same = again.csv == tr.csv && occ_again.csv == oc.csv;
  report("determinism", {same, fmt("translate and occlude CSVs with 1 vs %d workers are %s (%zu and %zu bytes)",
                                   workers, same ? "byte-identical" : "DIFFERENT", tr.csv.size(), oc.csv.size())});
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void dataset_reproduction() {
  const char* root_env = std::getenv("PJS_OTB_ROOT");
  if (!root_env || !*root_env) {
    std::printf("SKIP  %-28s PJS_OTB_ROOT not set (non-gating)\n", "dataset reproduction");
    return;
  }
  const fs::path root(root_env);
  const std::vector<std::vector<std::string>> wanted = {
      {"board"},  {"david"}, {"skating1"}, {"crossing"}, {"dollar"}, {"faceocc2"},
      {"stone"},  {"sylv", "sylvester"}, {"trellis"}, {"walking2"}};
  std::vector<fs::path> dirs;
  std::vector<std::string> missing;
  for (const auto& names : wanted) {
    fs::path found;
    if (fs::is_directory(root))
      for (const auto& e : fs::directory_iterator(root))
        for (const auto& n : names)
          if (e.is_directory() && lowercase(e.path().filename().string()) == n) found = e.path();
    if (found.empty()) missing.push_back(names.front());
    else dirs.push_back(found);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& n : missing) list += " " + n;
    std::printf("SKIP  %-28s missing sequences under %s:%s (non-gating)\n", "dataset reproduction", root_env,
                list.c_str());
    return;
  }
  double sr_sum = 0.0;
  for (const auto& dir : dirs) {
    const Sequence seq = load_sequence(dir);
    std::vector<RunReport> runs;
    for (std::uint64_t seed = 0; seed <= 9; ++seed) {
      TrackerConfig cfg;
      cfg.seed = seed;
      const auto results = track_sequence([&](std::size_t i) { return read_frame(seq.frames[i]); }, seq.size(),
                                          seq.ground_truth.front(), cfg);
      std::vector<Box> boxes;
      for (const auto& r : results) boxes.push_back(r.best_box);
      runs.push_back(make_report(boxes, seq.ground_truth));
    }
    const double sr = aggregate_runs(runs).success_rate;
    std::printf("      %-28s %s sr@0.60 = %.3f\n", "", seq.name.c_str(), sr);
    sr_sum += sr;
  }
  const double avg = sr_sum / double(dirs.size());
  report("dataset reproduction",
         {std::abs(avg - 0.69) <= 0.10, fmt("average sr@0.60 %.3f vs expected 0.69 +- 0.10 (non-gating)", avg)},
         false);
}

}  // namespace

int main() {
  try {
    report("solver monotonicity", solver_monotonicity());
    report("single-column equivalence", single_column_equivalence());
    report("SOMP exact recovery", somp_recovery());
    report("MAP closed form", map_closed_form());
    report("metric oracles", metric_oracles());
    report("likelihood-map shape", likelihood_map());
    end_to_end_and_determinism();
    dataset_reproduction();
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d gating criteria failed\n", g_failures ? "FAILED" : "OK", g_failures);
  return g_failures ? 1 : 0;
}
