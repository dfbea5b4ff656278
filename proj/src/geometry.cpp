#include "fusetrack/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace fusetrack {

BoundingBox::BoundingBox(double x1_, double y1_, double x2_, double y2_)
    : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
  if (!(x1 < x2) || !(y1 < y2)) {
    throw std::invalid_argument("BoundingBox: requires x1 < x2 and y1 < y2");
  }
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

double ioc(const BoundingBox& parent, const BoundingBox& child) {
  const double inter = intersection_area(parent, child);
  if (inter <= 0.0) return 0.0;
  return inter / child.area();
}

std::array<double, 4> normalize_box(const BoundingBox& box, int image_w, int image_h) {
  if (image_w <= 0 || image_h <= 0) {
    throw std::invalid_argument("normalize_box: image size must be positive");
  }
  const double w = static_cast<double>(image_w);
  const double h = static_cast<double>(image_h);
  return {box.cx() / w, box.cy() / h, box.width() / w, box.height() / h};
}

std::optional<BoundingBox> clip_box(const BoundingBox& box, int image_w, int image_h) {
  const double x1 = std::max(box.x1, 0.0);
  const double y1 = std::max(box.y1, 0.0);
  const double x2 = std::min(box.x2, static_cast<double>(image_w));
  const double y2 = std::min(box.y2, static_cast<double>(image_h));
  if (!(x1 < x2) || !(y1 < y2)) return std::nullopt;
  return BoundingBox(x1, y1, x2, y2);
}

}  // namespace fusetrack
