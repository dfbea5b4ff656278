#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fusetrack/geometry.hpp"

namespace fusetrack {

/// The three per-detection cue embeddings, all of one shared dimension d.
/// app and sem arrive with the detection; loc is produced by the engine's
/// location projection from raw_loc.
struct FeatureBundle {
  Eigen::VectorXd app;
  Eigen::VectorXd loc;
  Eigen::VectorXd sem;

  int dim() const { return static_cast<int>(app.size()); }
};

struct Detection {
  BoundingBox box;
  int class_id = 0;
  double score = 0.0;
  FeatureBundle features;
  // Normalized (cx, cy, w, h); the input to the location projection.
  Eigen::Vector4d raw_loc = Eigen::Vector4d::Zero();
};

struct Frame {
  std::int64_t frame_id = 0;
  int image_w = 0;
  int image_h = 0;
  std::vector<Detection> detections;
};

/// Greedy class-agnostic NMS. Candidates are visited in descending score
/// order (ties by x1 then y1) and suppressed when their IoU with an already
/// kept box exceeds iou_threshold. Returns kept indices in visit order, so
/// the output is invariant to the input order for distinct scores.
std::vector<int> nms_keep_indices(const std::vector<Detection>& detections,
                                  double iou_threshold);

std::vector<Detection> class_agnostic_nms(const std::vector<Detection>& detections,
                                          double iou_threshold);

}  // namespace fusetrack
