#include "fusetrack/types.hpp"

#include <algorithm>
#include <numeric>

namespace fusetrack {

std::vector<int> nms_keep_indices(const std::vector<Detection>& detections,
                                  double iou_threshold) {
  std::vector<int> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const Detection& da = detections[a];
    const Detection& db = detections[b];
    if (da.score != db.score) return da.score > db.score;
    if (da.box.x1 != db.box.x1) return da.box.x1 < db.box.x1;
    return da.box.y1 < db.box.y1;
  });

  std::vector<int> kept;
  kept.reserve(order.size());
  for (int i : order) {
    bool suppressed = false;
    for (int k : kept) {
      if (iou(detections[i].box, detections[k].box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

std::vector<Detection> class_agnostic_nms(const std::vector<Detection>& detections,
                                          double iou_threshold) {
  std::vector<Detection> out;
  for (int i : nms_keep_indices(detections, iou_threshold)) {
    out.push_back(detections[i]);
  }
  return out;
}

}  // namespace fusetrack
