// Independent brute-force reimplementations used as oracles. These stay
// deliberately naive and separate from the library code paths they check.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "fusetrack/types.hpp"

namespace oracles {

inline double box_iou(double ax1, double ay1, double ax2, double ay2, double bx1,
                      double by1, double bx2, double by2) {
  const double ix1 = std::max(ax1, bx1);
  const double iy1 = std::max(ay1, by1);
  const double ix2 = std::min(ax2, bx2);
  const double iy2 = std::min(ay2, by2);
  const double iw = ix2 - ix1;
  const double ih = iy2 - iy1;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double area_a = (ax2 - ax1) * (ay2 - ay1);
  const double area_b = (bx2 - bx1) * (by2 - by1);
  return inter / (area_a + area_b - inter);
}

inline double box_ioc(double px1, double py1, double px2, double py2, double cx1,
                      double cy1, double cx2, double cy2) {
  const double ix1 = std::max(px1, cx1);
  const double iy1 = std::max(py1, cy1);
  const double ix2 = std::min(px2, cx2);
  const double iy2 = std::min(py2, cy2);
  const double iw = ix2 - ix1;
  const double ih = iy2 - iy1;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return (iw * ih) / ((cx2 - cx1) * (cy2 - cy1));
}

// Greedy suppression written as an index scan rather than a sort, to stay
// independent of the library's ordering code.
inline std::vector<int> nms(const std::vector<fusetrack::Detection>& dets,
                            double threshold) {
  const int n = static_cast<int>(dets.size());
  std::vector<char> taken(n, 0), suppressed(n, 0);
  std::vector<int> kept;
  for (;;) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (taken[i] || suppressed[i]) continue;
      if (best < 0) {
        best = i;
        continue;
      }
      const auto& a = dets[i];
      const auto& b = dets[best];
      const bool wins = a.score > b.score ||
                        (a.score == b.score &&
                         (a.box.x1 < b.box.x1 ||
                          (a.box.x1 == b.box.x1 && a.box.y1 < b.box.y1)));
      if (wins) best = i;
    }
    if (best < 0) break;
    taken[best] = 1;
    kept.push_back(best);
    for (int i = 0; i < n; ++i) {
      if (taken[i] || suppressed[i]) continue;
      if (box_iou(dets[i].box.x1, dets[i].box.y1, dets[i].box.x2, dets[i].box.y2,
                  dets[best].box.x1, dets[best].box.y1, dets[best].box.x2,
                  dets[best].box.y2) > threshold) {
        suppressed[i] = 1;
      }
    }
  }
  return kept;
}

// Plain-loop softmax over scaled scores.
inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& s, double alpha) {
  Eigen::MatrixXd out(s.rows(), s.cols());
  for (int i = 0; i < s.rows(); ++i) {
    double mx = -1e300;
    for (int j = 0; j < s.cols(); ++j) mx = std::max(mx, alpha * s(i, j));
    double total = 0.0;
    for (int j = 0; j < s.cols(); ++j) total += std::exp(alpha * s(i, j) - mx);
    for (int j = 0; j < s.cols(); ++j) out(i, j) = std::exp(alpha * s(i, j) - mx) / total;
  }
  return out;
}

}  // namespace oracles
