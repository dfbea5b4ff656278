#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "fusetrack/config.hpp"
#include "fusetrack/model.hpp"
#include "fusetrack/tcp.hpp"
#include "fusetrack/types.hpp"

namespace fusetrack::tracker {

struct Track {
  int id = -1;
  std::deque<Eigen::VectorXd> memory;  // most recent association features
  BoundingBox last_box;
  int class_id = 0;
  std::int64_t last_seen = -1;
  int misses = 0;
};

/// raw = F_det * F_trk^T; result = (rowsoftmax(raw) + colsoftmax(raw)) / 2.
Eigen::MatrixXd bisoftmax_similarity(const Eigen::MatrixXd& f_det,
                                     const Eigen::MatrixXd& f_trk);

/// Injective detection-to-track assignment on a similarity matrix. Greedy
/// repeatedly takes the global maximum above threshold (ties by detection
/// then track index); optimal maximizes total similarity and then drops
/// below-threshold pairs.
std::vector<std::pair<int, int>> match(const Eigen::MatrixXd& sim, double threshold,
                                       Assignment assignment = Assignment::kGreedy);

/// Mean of the memory queue, length-normalized when nonzero.
Eigen::VectorXd track_representative(const Track& track);

struct TrackRecord {
  int track_id = -1;
  BoundingBox box;
  int class_id = 0;
  double score = 0.0;
  bool recovered = false;
};

struct FrameResult {
  std::int64_t frame_id = 0;
  std::vector<TrackRecord> tracks;
};

/// Online per-sequence tracker: cue fusion, hierarchical enhancement,
/// confidence recovery, then bi-softmax association and track lifecycle.
/// Frames must arrive with strictly increasing frame ids.
class Tracker {
 public:
  Tracker(ModelParams params, EngineConfig cfg);

  FrameResult step(const Frame& frame);

  const std::vector<Track>& tracks() const { return tracks_; }
  /// Sources consumed by the most recent step (previous-frame detections).
  const std::vector<tcp::TcpSource>& last_sources() const { return last_sources_; }

 private:
  ModelParams params_;
  EngineConfig cfg_;

  std::vector<Track> tracks_;
  int next_track_id_ = 0;
  bool has_prev_ = false;
  std::int64_t last_frame_id_ = 0;

  // Previous frame's final detection set with its features.
  std::vector<Detection> prev_dets_;
  mcf::CueMatrices prev_cues_;
  Eigen::MatrixXd prev_m_cue_;
  Eigen::MatrixXd prev_f_asso_;

  std::vector<tcp::TcpSource> last_sources_;
};

}  // namespace fusetrack::tracker
