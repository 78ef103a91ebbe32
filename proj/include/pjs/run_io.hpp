#pragma once

// Per-run tracker CSV:
//   frame,x,y,w,h,loglik,occ_0..occ_{m-1},err_0..err_{m-1}

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pjs/evalkit.hpp"
#include "pjs/tracker.hpp"

namespace pjs {

inline void write_run_header(std::ostream& os, int patch_count) {
  os << "frame,x,y,w,h,loglik";
  for (int i = 0; i < patch_count; ++i) os << ",occ_" << i;
  for (int i = 0; i < patch_count; ++i) os << ",err_" << i;
  os << '\n';
}

inline void write_run_row(std::ostream& os, const FrameResult& r) {
  os << std::setprecision(12) << r.frame << ',' << r.best_box.x << ',' << r.best_box.y << ',' << r.best_box.w
     << ',' << r.best_box.h << ',' << r.log_likelihood;
  for (bool occ : r.occlusion_mask) os << ',' << (occ ? 1 : 0);
  for (double e : r.patch_errors) os << ',' << e;
  os << '\n';
}

inline void write_run_csv(std::ostream& os, const std::vector<FrameResult>& results, int patch_count) {
  write_run_header(os, patch_count);
  for (const auto& r : results) write_run_row(os, r);
}

/// Boxes of a run CSV, in row order; columns are located by header name.
inline std::vector<Box> read_run_boxes(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open run file " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty run file " + file.string());
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header.push_back(cell);
  }
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw LoadError("run file " + file.string() + " lacks column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cx = column("x"), cy = column("y"), cw = column("w"), ch = column("h");

  std::vector<Box> boxes;
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size())
      throw LoadError(file.string() + ":" + std::to_string(lineno) + " has the wrong number of columns");
    try {
      boxes.push_back({std::stod(cells[cx]), std::stod(cells[cy]), std::stod(cells[cw]), std::stod(cells[ch])});
    } catch (const std::exception&) {
      throw LoadError(file.string() + ":" + std::to_string(lineno) + " has a non-numeric box");
    }
  }
  return boxes;
}

}  // namespace pjs
