#pragma once

namespace pjs {

/// Axis-aligned rectangle in pixels: top-left corner plus extent.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  double area() const { return w * h; }

  friend bool operator==(const Box&, const Box&) = default;
};

}  // namespace pjs
