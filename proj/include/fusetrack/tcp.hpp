#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fusetrack/config.hpp"
#include "fusetrack/types.hpp"

namespace fusetrack::tcp {

/// High-confidence detection from the previous frame, kept with the feature
/// it carried there.
struct TcpSource {
  BoundingBox box;
  int class_id = 0;
  double score = 0.0;
  Eigen::VectorXd feature;
};

/// Low-confidence detection of the current frame eligible for recovery.
/// det_index points back into the frame's detection list.
struct TcpCandidate {
  int det_index = -1;
  BoundingBox box;
  int class_id = 0;
  double score = 0.0;
  Eigen::VectorXd feature;
};

/// Edge weights of the source/candidate bipartite graph, indexed
/// (source, candidate). combined = asso + beta * iou elementwise.
struct BipartiteEdges {
  Eigen::MatrixXd asso;
  Eigen::MatrixXd iou;
  Eigen::MatrixXd combined;
  // Per candidate, indices of sources sharing its predicted class.
  std::vector<std::vector<int>> same_class_sources;
};

/// NMS at cfg.nms_iou, then keep detections with score strictly above
/// tau_high. features holds one association-feature row per detection.
std::vector<TcpSource> select_sources(const std::vector<Detection>& dets,
                                      const Eigen::MatrixXd& features,
                                      const TcpConfig& cfg);

/// Detections with score in the closed interval [tau_low, tau_high], sorted
/// by descending score (ties by x1 then y1) and truncated to candidate_cap.
std::vector<TcpCandidate> select_candidates(const std::vector<Detection>& dets,
                                            const Eigen::MatrixXd& features,
                                            const TcpConfig& cfg);

BipartiteEdges edge_weights(const std::vector<TcpSource>& sources,
                            const std::vector<TcpCandidate>& candidates,
                            double beta);

/// First matching tier wins: mean_w must strictly exceed the tier's bound and
/// the source count must reach its minimum. No sources means 0.
double propagation_strength(double mean_w, int count, const TcpConfig& cfg);

/// Blends each candidate's score with the weighted mean score of its
/// same-class sources, then clamps from below at the original score.
std::vector<double> propagate(const std::vector<TcpCandidate>& candidates,
                              const std::vector<TcpSource>& sources,
                              const BipartiteEdges& edges, const TcpConfig& cfg);

struct Recovery {
  int det_index = -1;
  double new_score = 0.0;
};

/// Candidates whose adjusted score strictly exceeds tau_high, promoted with
/// that score.
std::vector<Recovery> recover(const std::vector<TcpCandidate>& candidates,
                              const std::vector<double>& adjusted,
                              const TcpConfig& cfg);

}  // namespace fusetrack::tcp
