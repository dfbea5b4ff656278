#pragma once

#include <array>
#include <optional>

namespace fusetrack {

/// Axis-aligned box in image pixel coordinates. Intervals are half-open, so
/// area = (x2-x1)*(y2-y1) with no +1 correction. Construction rejects
/// degenerate boxes (x1 >= x2 or y1 >= y2).
struct BoundingBox {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  BoundingBox() = default;
  BoundingBox(double x1_, double y1_, double x2_, double y2_);

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }
};

double intersection_area(const BoundingBox& a, const BoundingBox& b);

/// Intersection over union, in [0,1]. Symmetric; 1 iff identical boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Intersection over child: Area(parent & child) / Area(child). Equals 1 iff
/// the child lies fully inside the parent. Not symmetric.
double ioc(const BoundingBox& parent, const BoundingBox& child);

/// Center/size normalization: (cx/W, cy/H, w/W, h/H), each in [0,1] for a box
/// inside the image. Throws on a non-positive image size.
std::array<double, 4> normalize_box(const BoundingBox& box, int image_w, int image_h);

/// Clips a box to [0,W]x[0,H]. Returns nullopt when nothing remains.
std::optional<BoundingBox> clip_box(const BoundingBox& box, int image_w, int image_h);

}  // namespace fusetrack
