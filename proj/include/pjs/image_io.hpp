#pragma once

// Frame decoding/encoding. Needs OpenCV core + imgcodecs (link pjs_io).

#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "pjs/error.hpp"
#include "pjs/motion.hpp"

namespace pjs {

/// Reads an image and converts it to luminance 0.299 R + 0.587 G + 0.114 B in [0, 1].
inline GrayFrame read_frame(const std::filesystem::path& path) {
  const cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw LoadError("cannot decode image " + path.string());
  if (img.depth() != CV_8U) throw LoadError("only 8-bit images are supported: " + path.string());

  std::vector<double> pixels(static_cast<std::size_t>(img.rows) * img.cols);
  const int channels = img.channels();
  for (int y = 0; y < img.rows; ++y) {
    const unsigned char* row = img.ptr<unsigned char>(y);
    for (int x = 0; x < img.cols; ++x) {
      const unsigned char* px = row + static_cast<std::ptrdiff_t>(x) * channels;
      double v;
      if (channels >= 3)  // OpenCV stores BGR(A)
        v = (0.299 * px[2] + 0.587 * px[1] + 0.114 * px[0]) / 255.0;
      else
        v = px[0] / 255.0;
      pixels[static_cast<std::size_t>(y) * img.cols + x] = std::clamp(v, 0.0, 1.0);
    }
  }
  return GrayFrame(img.cols, img.rows, std::move(pixels));
}

/// Writes an 8-bit grayscale image; the format follows the file extension.
inline void write_frame(const std::filesystem::path& path, const GrayFrame& frame) {
  cv::Mat img(frame.height(), frame.width(), CV_8UC1);
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      img.at<unsigned char>(y, x) = static_cast<unsigned char>(std::lround(frame.at(x, y) * 255.0));
  if (!cv::imwrite(path.string(), img)) throw LoadError("cannot write image " + path.string());
}

}  // namespace pjs
