#pragma once

// OTB-style sequence loading and tracking accuracy metrics.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pjs/box.hpp"
#include "pjs/error.hpp"

namespace pjs {

namespace fs = std::filesystem;

struct Sequence {
  std::string name;
  std::vector<fs::path> frames;
  std::vector<Box> ground_truth;

  std::size_t size() const { return frames.size(); }
};

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

/// Parses "x,y,w,h" with commas, tabs or spaces as separators.
inline Box parse_box_line(const std::string& line, const std::string& where) {
  std::string normalized = line;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::replace(normalized.begin(), normalized.end(), '\t', ' ');
  std::istringstream in(normalized);
  double v[4];
  for (double& x : v)
    if (!(in >> x)) throw LoadError("unparsable box at " + where + ": \"" + line + "\"");
  std::string rest;
  if (in >> rest) throw LoadError("trailing data at " + where + ": \"" + line + "\"");
  if (!(v[2] > 0.0 && v[3] > 0.0)) throw LoadError("box with non-positive size at " + where);
  return {v[0], v[1], v[2], v[3]};
}

inline bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace detail

inline std::vector<Box> load_ground_truth(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open ground truth " + file.string());
  std::vector<Box> boxes;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::blank(line)) continue;
    boxes.push_back(detail::parse_box_line(line, file.string() + ":" + std::to_string(lineno)));
  }
  return boxes;
}

/// Frame images under <dir>/img (jpg/jpeg/png), sorted by the number in the file stem.
inline std::vector<fs::path> list_frames(const fs::path& img_dir) {
  if (!fs::is_directory(img_dir)) throw LoadError("missing image folder " + img_dir.string());
  std::vector<std::pair<long, fs::path>> numbered;
  for (const auto& entry : fs::directory_iterator(img_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = detail::lower(entry.path().extension().string());
    if (ext != ".jpg" && ext != ".jpeg" && ext != ".png") continue;
    const std::string stem = entry.path().stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); }))
      throw LoadError("frame file name is not numeric: " + entry.path().string());
    numbered.emplace_back(std::stol(stem), entry.path());
  }
  std::sort(numbered.begin(), numbered.end());
  std::vector<fs::path> frames;
  for (auto& [n, p] : numbered) frames.push_back(std::move(p));
  return frames;
}

/// <dir>/img/####.(jpg|png) plus <dir>/groundtruth_rect.txt. Boxes are kept as given.
inline Sequence load_sequence(const fs::path& dir) {
  Sequence seq;
  seq.name = fs::path(dir).lexically_normal().filename().string();
  if (seq.name.empty()) seq.name = fs::path(dir).lexically_normal().parent_path().filename().string();
  const fs::path gt = dir / "groundtruth_rect.txt";
  if (!fs::exists(gt)) throw LoadError("missing ground truth file " + gt.string());
  seq.frames = list_frames(dir / "img");
  seq.ground_truth = load_ground_truth(gt);
  if (seq.frames.empty()) throw LoadError("no frames in " + (dir / "img").string());
  if (seq.frames.size() != seq.ground_truth.size())
    throw LoadError("count mismatch in " + dir.string() + ": " + std::to_string(seq.frames.size()) +
                    " frames vs " + std::to_string(seq.ground_truth.size()) + " ground-truth boxes");
  return seq;
}

/// Center location error.
inline double cle(const Box& a, const Box& b) {
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

/// Intersection over union of the continuous rectangles.
inline double voc_overlap(const Box& a, const Box& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

/// Fraction of frames whose overlap is strictly greater than the threshold.
inline double success_rate(const std::vector<double>& overlaps, double threshold) {
  if (overlaps.empty()) throw InvalidInput("success rate of an empty overlap list");
  const auto hits = std::count_if(overlaps.begin(), overlaps.end(), [&](double o) { return o > threshold; });
  return static_cast<double>(hits) / static_cast<double>(overlaps.size());
}

struct CurvePoint {
  double threshold = 0.0;
  double rate = 0.0;
};

/// success_rate on `resolution` evenly spaced thresholds covering [0, 1].
inline std::vector<CurvePoint> success_plot(const std::vector<double>& overlaps, int resolution) {
  if (resolution < 2) throw InvalidInput("success plot resolution must be >= 2");
  std::vector<CurvePoint> curve;
  curve.reserve(static_cast<std::size_t>(resolution));
  for (int i = 0; i < resolution; ++i) {
    const double t = static_cast<double>(i) / (resolution - 1);
    curve.push_back({t, success_rate(overlaps, t)});
  }
  return curve;
}

struct RunReport {
  std::vector<double> cle;
  std::vector<double> overlap;
  double mean_cle = 0.0;
  double mean_overlap = 0.0;
  double threshold = 0.6;
  double success_rate = 0.0;
  std::vector<CurvePoint> success_curve;

  std::size_t frames() const { return cle.size(); }
};

inline constexpr int kDefaultCurveResolution = 101;

inline RunReport make_report(const std::vector<Box>& predicted, const std::vector<Box>& truth,
                             double threshold = 0.6, int resolution = kDefaultCurveResolution) {
  if (predicted.size() != truth.size())
    throw InvalidInput("prediction has " + std::to_string(predicted.size()) + " frames, ground truth " +
                       std::to_string(truth.size()));
  if (truth.empty()) throw InvalidInput("cannot report on an empty run");
  RunReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    r.cle.push_back(cle(predicted[i], truth[i]));
    r.overlap.push_back(voc_overlap(predicted[i], truth[i]));
  }
  const double n = static_cast<double>(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    r.mean_cle += r.cle[i] / n;
    r.mean_overlap += r.overlap[i] / n;
  }
  r.success_rate = success_rate(r.overlap, threshold);
  r.success_curve = success_plot(r.overlap, resolution);
  return r;
}

/// Arithmetic mean of per-frame values, aggregates and curves across runs.
inline RunReport aggregate_runs(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw InvalidInput("no runs to aggregate");
  const RunReport& first = reports.front();
  RunReport out;
  out.threshold = first.threshold;
  out.cle.assign(first.frames(), 0.0);
  out.overlap.assign(first.frames(), 0.0);
  out.success_curve = first.success_curve;
  for (auto& p : out.success_curve) p.rate = 0.0;
  const double n = static_cast<double>(reports.size());
  for (const RunReport& r : reports) {
    if (r.frames() != first.frames() || r.success_curve.size() != first.success_curve.size())
      throw InvalidInput("runs disagree in length");
    for (std::size_t i = 0; i < r.frames(); ++i) {
      out.cle[i] += r.cle[i] / n;
      out.overlap[i] += r.overlap[i] / n;
    }
    out.mean_cle += r.mean_cle / n;
    out.mean_overlap += r.mean_overlap / n;
    out.success_rate += r.success_rate / n;
    for (std::size_t i = 0; i < r.success_curve.size(); ++i) out.success_curve[i].rate += r.success_curve[i].rate / n;
  }
  return out;
}

inline std::string success_label(double threshold) {
  std::ostringstream s;
  s << "sr@" << std::fixed << std::setprecision(2) << threshold;
  return s.str();
}

/// frame,cle,overlap rows followed by mean and success-rate footer lines.
inline void write_report_csv(std::ostream& os, const RunReport& r) {
  os << std::setprecision(10) << "frame,cle,overlap\n";
  for (std::size_t i = 0; i < r.frames(); ++i) os << i + 1 << ',' << r.cle[i] << ',' << r.overlap[i] << '\n';
  os << "mean," << r.mean_cle << ',' << r.mean_overlap << '\n';
  os << success_label(r.threshold) << ',' << r.success_rate << '\n';
}

inline void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve) {
  os << std::setprecision(10) << "threshold,success_rate\n";
  for (const auto& p : curve) os << p.threshold << ',' << p.rate << '\n';
}

/// Minimal single-series SVG line chart.
inline void write_svg_plot(std::ostream& os, const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::string& title, const std::string& x_label, const std::string& y_label) {
  const double width = 640, height = 400, left = 60, right = 20, top = 40, bottom = 50;
  double xmin = xs.empty() ? 0 : *std::min_element(xs.begin(), xs.end());
  double xmax = xs.empty() ? 1 : *std::max_element(xs.begin(), xs.end());
  double ymin = 0.0;
  double ymax = ys.empty() ? 1 : std::max(1e-12, *std::max_element(ys.begin(), ys.end()));
  if (xmax <= xmin) xmax = xmin + 1;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (width - left - right); };
  auto py = [&](double y) { return height - bottom - (y - ymin) / (ymax - ymin) * (height - top - bottom); };

  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << py(ymin) << "\" x2=\"" << width - right << "\" y2=\"" << py(ymin)
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << py(ymin) << "\" x2=\"" << left << "\" y2=\"" << top
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << height / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << height / 2
     << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
  for (double frac : {0.0, 0.5, 1.0}) {
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(ymin + frac * (ymax - ymin)) + 4
       << "\" text-anchor=\"end\" font-size=\"10\">" << ymin + frac * (ymax - ymin) << "</text>\n";
    os << "<text x=\"" << px(xmin + frac * (xmax - xmin)) << "\" y=\"" << height - bottom + 14
       << "\" text-anchor=\"middle\" font-size=\"10\">" << xmin + frac * (xmax - xmin) << "</text>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) os << px(xs[i]) << ',' << py(ys[i]) << ' ';
  os << "\"/>\n</svg>\n";
}

}  // namespace pjs
