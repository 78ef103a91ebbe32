// pjs: track image sequences, evaluate runs against ground truth, and
// generate synthetic test sequences.
//
//   pjs synth --kind translate --out data/translate
//   pjs track --seq data/translate --seeds 0..9 --out results
//   pjs eval  --seq data/translate --out results --threshold 0.6

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pjs/config.hpp"
#include "pjs/evalkit.hpp"
#include "pjs/image_io.hpp"
#include "pjs/run_io.hpp"
#include "pjs/synth.hpp"
#include "pjs/tracker.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// "a..b" (inclusive), "a,b,c" or a single integer.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto range = text.find("..");
  try {
    if (range != std::string::npos) {
      const auto lo = std::stoull(text.substr(0, range));
      const auto hi = std::stoull(text.substr(range + 2));
      if (hi < lo) throw UsageError("seed range " + text + " is empty");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      std::stringstream in(text);
      std::string item;
      while (std::getline(in, item, ','))
        if (!item.empty()) seeds.push_back(std::stoull(item));
    }
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse seed list \"" + text + "\"");
  }
  if (seeds.empty()) throw UsageError("seed list is empty");
  return seeds;
}

std::string seed_file_stem(std::uint64_t seed) {
  std::ostringstream s;
  s << "seed" << std::setw(2) << std::setfill('0') << seed;
  return s.str();
}

pjs::TrackerConfig load_config(const std::string& config_path, const std::string& solver, int threads) {
  pjs::TrackerConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open config file " + config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config file " + config_path + " is not valid JSON: " + e.what());
    }
    try {
      config = pjs::config_from_json(j);
    } catch (const pjs::InvalidInput& e) {
      throw UsageError(e.what());
    }
  }
  try {
    if (!solver.empty()) config.solver = pjs::parse_solver(solver);
    if (threads > 0) config.threads = threads;
    config.validate();
  } catch (const pjs::InvalidInput& e) {
    throw UsageError(e.what());
  }
  return config;
}

struct TrackOptions {
  std::vector<std::string> sequences;
  std::string seeds = "0..9";
  std::string out = "results";
  std::string config;
  std::string solver;
  std::string dump_config;
  int threads = 0;
};

int cmd_track(const TrackOptions& opt) {
  const auto seeds = parse_seeds(opt.seeds);
  pjs::TrackerConfig config = load_config(opt.config, opt.solver, opt.threads);
  if (!opt.dump_config.empty()) {
    std::ofstream dump(opt.dump_config);
    dump << std::setw(2) << pjs::config_to_json(config) << '\n';
  }

  std::vector<pjs::Sequence> sequences;
  for (const auto& dir : opt.sequences) sequences.push_back(pjs::load_sequence(dir));

  bool all_ok = true;
  for (const auto& seq : sequences) {
    const fs::path out_dir = fs::path(opt.out) / seq.name;
    fs::create_directories(out_dir);
    for (const auto seed : seeds) {
      pjs::TrackerConfig run_config = config;
      run_config.seed = seed;
      const fs::path csv = out_dir / (seed_file_stem(seed) + ".csv");
      try {
        const auto results = pjs::track_sequence(
            [&](std::size_t i) { return pjs::read_frame(seq.frames[i]); }, seq.size(), seq.ground_truth.front(),
            run_config);
        std::ofstream os(csv);
        pjs::write_run_csv(os, results, run_config.grid().patch_count());
        if (!os) throw pjs::LoadError("cannot write " + csv.string());
        std::cout << seq.name << " seed " << seed << ": " << results.size() << " frames -> " << csv.string()
                  << '\n';
      } catch (const std::exception& e) {
        all_ok = false;
        std::ofstream err(out_dir / (seed_file_stem(seed) + ".error.txt"));
        err << e.what() << '\n';
        std::cerr << seq.name << " seed " << seed << " failed: " << e.what() << '\n';
      }
    }
  }
  return all_ok ? 0 : kExitFailure;
}

struct EvalOptions {
  std::vector<std::string> sequences;
  std::string out = "results";
  double threshold = 0.6;
  int resolution = pjs::kDefaultCurveResolution;
};

int cmd_eval(const EvalOptions& opt) {
  const std::string label = pjs::success_label(opt.threshold);
  std::ofstream summary(fs::path(opt.out) / "summary.csv");
  summary << std::setprecision(10) << "sequence,runs,mean_cle,mean_overlap," << label << '\n';
  std::cout << std::left << std::setw(16) << "sequence" << std::setw(6) << "runs" << std::setw(12) << "mean_cle"
            << std::setw(14) << "mean_overlap" << label << '\n';

  double sr_sum = 0.0;
  for (const auto& dir : opt.sequences) {
    const std::string name = fs::path(dir).lexically_normal().filename().string();
    const auto truth = pjs::load_ground_truth(fs::path(dir) / "groundtruth_rect.txt");
    const fs::path run_dir = fs::path(opt.out) / name;
    if (!fs::is_directory(run_dir)) throw pjs::LoadError("no runs found for " + name + " in " + run_dir.string());

    std::vector<fs::path> runs;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
      const std::string file = entry.path().filename().string();
      if (file.rfind("seed", 0) == 0 && entry.path().extension() == ".csv") runs.push_back(entry.path());
    }
    std::sort(runs.begin(), runs.end());
    if (runs.empty()) throw pjs::LoadError("no run files seed*.csv in " + run_dir.string());

    std::vector<pjs::RunReport> reports;
    for (const auto& run : runs) {
      const auto boxes = pjs::read_run_boxes(run);
      if (boxes.size() != truth.size())
        throw pjs::LoadError(run.string() + " has " + std::to_string(boxes.size()) + " frames but ground truth has " +
                             std::to_string(truth.size()));
      reports.push_back(pjs::make_report(boxes, truth, opt.threshold, opt.resolution));
    }
    const pjs::RunReport agg = pjs::aggregate_runs(reports);

    std::ofstream report(run_dir / "report.csv");
    pjs::write_report_csv(report, agg);
    std::ofstream curve(run_dir / "success_curve.csv");
    pjs::write_curve_csv(curve, agg.success_curve);

    std::vector<double> frames(agg.frames());
    for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = static_cast<double>(i + 1);
    std::vector<double> ts, rates;
    for (const auto& p : agg.success_curve) {
      ts.push_back(p.threshold);
      rates.push_back(p.rate);
    }
    std::ofstream cle_svg(run_dir / "cle.svg");
    pjs::write_svg_plot(cle_svg, frames, agg.cle, name + ": center location error", "frame", "CLE (px)");
    std::ofstream ov_svg(run_dir / "overlap.svg");
    pjs::write_svg_plot(ov_svg, frames, agg.overlap, name + ": VOC overlap", "frame", "overlap");
    std::ofstream sp_svg(run_dir / "success.svg");
    pjs::write_svg_plot(sp_svg, ts, rates, name + ": success plot", "overlap threshold", "success rate");

    summary << name << ',' << reports.size() << ',' << agg.mean_cle << ',' << agg.mean_overlap << ','
            << agg.success_rate << '\n';
    std::cout << std::setw(16) << name << std::setw(6) << reports.size() << std::setw(12) << std::setprecision(4)
              << agg.mean_cle << std::setw(14) << agg.mean_overlap << agg.success_rate << '\n';
    sr_sum += agg.success_rate;
  }
  if (opt.sequences.size() > 1)
    std::cout << "average " << label << " over " << opt.sequences.size()
              << " sequences: " << sr_sum / static_cast<double>(opt.sequences.size()) << '\n';
  return 0;
}

struct SynthOptions {
  std::string kind;
  std::string out;
  pjs::SynthParams params;
};

int cmd_synth(const SynthOptions& opt) {
  const pjs::SyntheticSequence seq = pjs::make_synthetic(pjs::parse_synth_kind(opt.kind), opt.params);
  const fs::path img_dir = fs::path(opt.out) / "img";
  std::error_code ec;
  fs::create_directories(img_dir, ec);
  if (ec) throw pjs::LoadError("cannot create " + img_dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    std::ostringstream name;
    name << std::setw(4) << std::setfill('0') << i + 1 << ".png";
    pjs::write_frame(img_dir / name.str(), seq.frames[i]);
  }
  std::ofstream gt(fs::path(opt.out) / "groundtruth_rect.txt");
  for (const auto& b : seq.ground_truth) gt << b.x << ',' << b.y << ',' << b.w << ',' << b.h << '\n';
  if (!gt) throw pjs::LoadError("cannot write ground truth under " + opt.out);
  std::cout << "wrote " << seq.frames.size() << " frames to " << opt.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patchwise joint-sparse tracker"};
  app.require_subcommand(1);

  TrackOptions track;
  auto* track_cmd = app.add_subcommand("track", "Track every sequence once per seed");
  track_cmd->add_option("--seq", track.sequences, "Sequence directory (repeatable)")->required();
  track_cmd->add_option("--seeds", track.seeds, "Seeds as a..b or a,b,c")->capture_default_str();
  track_cmd->add_option("--out", track.out, "Output directory")->capture_default_str();
  track_cmd->add_option("--config", track.config, "JSON config file");
  track_cmd->add_option("--solver", track.solver, "pjs-s (SOMP) or pjs-m (M-FOCUSS)")
      ->check(CLI::IsMember({"pjs-s", "pjs-m"}));
  track_cmd->add_option("--threads", track.threads, "Worker threads (default: PJS_THREADS or all cores)");
  track_cmd->add_option("--dump-config", track.dump_config, "Write the effective config as JSON");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score run CSVs against ground truth");
  eval_cmd->add_option("--seq", eval.sequences, "Sequence directory (repeatable)")->required();
  eval_cmd->add_option("--out", eval.out, "Directory holding <seq>/seedNN.csv runs")->capture_default_str();
  eval_cmd->add_option("--threshold", eval.threshold, "Overlap threshold for the success rate")
      ->capture_default_str();
  eval_cmd->add_option("--resolution", eval.resolution, "Success-plot threshold steps")->capture_default_str();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic sequence");
  synth_cmd->add_option("--kind", synth.kind, "translate, occlude or static")
      ->required()
      ->check(CLI::IsMember({"translate", "occlude", "static"}));
  synth_cmd->add_option("--out", synth.out, "Output sequence directory")->required();
  synth_cmd->add_option("--frames", synth.params.frames, "Frame count")->capture_default_str();
  synth_cmd->add_option("--speed", synth.params.speed, "Horizontal speed in px/frame")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*track_cmd) return cmd_track(track);
    if (*eval_cmd) return cmd_eval(eval);
    if (*synth_cmd) return cmd_synth(synth);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
