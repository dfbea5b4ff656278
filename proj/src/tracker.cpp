#include "fusetrack/tracker.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "fusetrack/mga.hpp"
#include "fusetrack/numeric.hpp"

namespace fusetrack::tracker {

namespace {

Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& raw) {
  return softmax_rows(raw.transpose(), 1.0).transpose();
}

Eigen::MatrixXd bisoftmax_from_raw(const Eigen::MatrixXd& raw) {
  return 0.5 * (softmax_rows(raw, 1.0) + softmax_cols(raw));
}

// Classic O(n^3) Hungarian on a square cost matrix; returns the row assigned
// to each column.
std::vector<int> hungarian_min(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_of_col(n, -1);
  for (int j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
  return row_of_col;
}

std::vector<std::pair<int, int>> match_greedy(const Eigen::MatrixXd& sim,
                                              double threshold) {
  const int n = static_cast<int>(sim.rows());
  const int k = static_cast<int>(sim.cols());
  std::vector<char> det_used(n, 0), trk_used(k, 0);
  std::vector<std::pair<int, int>> out;
  for (;;) {
    double best = threshold;
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      if (det_used[i]) continue;
      for (int j = 0; j < k; ++j) {
        if (trk_used[j]) continue;
        if (sim(i, j) > best) {
          best = sim(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;
    det_used[bi] = 1;
    trk_used[bj] = 1;
    out.emplace_back(bi, bj);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int, int>> match_optimal(const Eigen::MatrixXd& sim,
                                               double threshold) {
  const int n = static_cast<int>(sim.rows());
  const int k = static_cast<int>(sim.cols());
  const int sq = std::max(n, k);
  if (sq == 0) return {};
  const double top = sim.size() > 0 ? sim.maxCoeff() : 0.0;
  // Pad to square; missing pairs behave like similarity 0.
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(sq, sq, top);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) cost(i, j) = top - sim(i, j);
  }
  const std::vector<int> row_of_col = hungarian_min(cost);
  std::vector<std::pair<int, int>> out;
  for (int j = 0; j < k; ++j) {
    const int i = row_of_col[j];
    if (i >= 0 && i < n && sim(i, j) > threshold) out.emplace_back(i, j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Eigen::MatrixXd bisoftmax_similarity(const Eigen::MatrixXd& f_det,
                                     const Eigen::MatrixXd& f_trk) {
  return bisoftmax_from_raw(f_det * f_trk.transpose());
}

std::vector<std::pair<int, int>> match(const Eigen::MatrixXd& sim, double threshold,
                                       Assignment assignment) {
  if (sim.rows() == 0 || sim.cols() == 0) return {};
  return assignment == Assignment::kGreedy ? match_greedy(sim, threshold)
                                           : match_optimal(sim, threshold);
}

Eigen::VectorXd track_representative(const Track& track) {
  if (track.memory.empty()) {
    throw std::logic_error("track_representative: empty memory");
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(track.memory.front().size());
  for (const Eigen::VectorXd& f : track.memory) mean += f;
  mean /= static_cast<double>(track.memory.size());
  const double norm = mean.norm();
  if (norm > 0.0) mean /= norm;
  return mean;
}

Tracker::Tracker(ModelParams params, EngineConfig cfg)
    : params_(std::move(params)), cfg_(std::move(cfg)) {
  cfg_.validate();
  params_.check();
}

FrameResult Tracker::step(const Frame& frame) {
  if (has_prev_ && frame.frame_id <= last_frame_id_) {
    throw std::invalid_argument("Tracker::step: frame ids must be strictly increasing");
  }
  last_frame_id_ = frame.frame_id;

  // Ingest: clip to the image, drop unusable scores, class-agnostic NMS,
  // then cap to the per-frame detection budget.
  std::vector<Detection> working;
  for (const Detection& det : frame.detections) {
    if (det.score < cfg_.tcp.tau_low) continue;
    if (auto clipped = clip_box(det.box, frame.image_w, frame.image_h)) {
      Detection d = det;
      d.box = *clipped;
      const auto raw = normalize_box(d.box, frame.image_w, frame.image_h);
      d.raw_loc = Eigen::Vector4d(raw[0], raw[1], raw[2], raw[3]);
      working.push_back(std::move(d));
    }
  }
  working = class_agnostic_nms(working, cfg_.tracker.nms_iou);
  if (static_cast<int>(working.size()) > cfg_.tracker.max_detections) {
    working.resize(cfg_.tracker.max_detections);
  }
  const int n = static_cast<int>(working.size());

  // Feature stages: fusion, then hierarchical enhancement.
  const mcf::TemperatureConfig temp{cfg_.mcf.delta, cfg_.mcf.epsilon};
  const mcf::CueMatrices* prev_cues = has_prev_ ? &prev_cues_ : nullptr;
  mcf::McfOutput fused =
      mcf::mcf_forward(working, prev_cues, params_.mcf, temp, cfg_.mcf.fusion);

  std::vector<BoundingBox> boxes;
  boxes.reserve(working.size());
  for (const Detection& det : working) boxes.push_back(det.box);
  const mga::InclusionMask mask = mga::build_inclusion_mask(boxes, cfg_.mga.tau_ioc);
  mga::TaqScores taq;
  if (has_prev_ && prev_m_cue_.rows() > 0 && n > 0) {
    const double alpha =
        mcf::adaptive_temperature(n, static_cast<int>(prev_m_cue_.rows()), temp);
    taq = mga::taq_scores(fused.m_cue, prev_m_cue_, alpha);
  } else {
    taq.q = Eigen::VectorXd::Ones(n);
  }
  const Eigen::MatrixXd f_asso = mga::aggregate(fused.m_cue, mask, taq, params_.mga,
                                                cfg_.mga.tau_q, cfg_.mga.lambda);

  // Confidence recovery against the previous frame's sources.
  last_sources_.clear();
  std::vector<double> adjusted(working.size());
  for (int i = 0; i < n; ++i) adjusted[i] = working[i].score;
  std::vector<char> recovered_flag(working.size(), 0);
  if (has_prev_ && !prev_dets_.empty()) {
    last_sources_ = tcp::select_sources(prev_dets_, prev_f_asso_, cfg_.tcp);
    const std::vector<tcp::TcpCandidate> candidates =
        tcp::select_candidates(working, f_asso, cfg_.tcp);
    if (!last_sources_.empty() && !candidates.empty()) {
      const tcp::BipartiteEdges edges =
          tcp::edge_weights(last_sources_, candidates, cfg_.tcp.beta);
      const std::vector<double> scores =
          tcp::propagate(candidates, last_sources_, edges, cfg_.tcp);
      for (const tcp::Recovery& rec : tcp::recover(candidates, scores, cfg_.tcp)) {
        adjusted[rec.det_index] = rec.new_score;
        recovered_flag[rec.det_index] = 1;
      }
    }
  }

  // Final detection set: confident detections plus recoveries.
  std::vector<int> final_idx;
  for (int i = 0; i < n; ++i) {
    if (working[i].score > cfg_.tcp.tau_high || recovered_flag[i]) {
      final_idx.push_back(i);
    }
  }
  const int nf = static_cast<int>(final_idx.size());
  Eigen::MatrixXd final_f_asso(nf, params_.dim());
  for (int k = 0; k < nf; ++k) final_f_asso.row(k) = f_asso.row(final_idx[k]);

  // Associate against live tracks.
  std::vector<int> assigned_track(nf, -1);
  if (nf > 0 && !tracks_.empty()) {
    Eigen::MatrixXd raw(nf, static_cast<int>(tracks_.size()));
    if (cfg_.tracker.representative == Representative::kMean) {
      Eigen::MatrixXd reps(static_cast<int>(tracks_.size()), params_.dim());
      for (std::size_t j = 0; j < tracks_.size(); ++j) {
        reps.row(j) = track_representative(tracks_[j]).transpose();
      }
      raw = final_f_asso * reps.transpose();
    } else {
      for (int i = 0; i < nf; ++i) {
        for (std::size_t j = 0; j < tracks_.size(); ++j) {
          double best = -std::numeric_limits<double>::infinity();
          for (const Eigen::VectorXd& m : tracks_[j].memory) {
            best = std::max(best, final_f_asso.row(i).dot(m.transpose()));
          }
          raw(i, static_cast<int>(j)) = best;
        }
      }
    }
    const Eigen::MatrixXd sim = bisoftmax_from_raw(raw);
    for (const auto& [di, tj] :
         match(sim, cfg_.tracker.match_threshold, cfg_.tracker.assignment)) {
      assigned_track[di] = tj;
    }
  }

  FrameResult result;
  result.frame_id = frame.frame_id;
  for (int k = 0; k < nf; ++k) {
    const int i = final_idx[k];
    Track* track = nullptr;
    if (assigned_track[k] >= 0) {
      track = &tracks_[assigned_track[k]];
    } else {
      tracks_.push_back(Track{next_track_id_++, {}, working[i].box,
                              working[i].class_id, frame.frame_id, 0});
      track = &tracks_.back();
    }
    track->memory.push_back(final_f_asso.row(k).transpose());
    while (static_cast<int>(track->memory.size()) > cfg_.tracker.memory_len) {
      track->memory.pop_front();
    }
    track->last_box = working[i].box;
    track->class_id = working[i].class_id;
    track->last_seen = frame.frame_id;
    track->misses = 0;
    result.tracks.push_back(TrackRecord{track->id, working[i].box,
                                        working[i].class_id, adjusted[i],
                                        recovered_flag[i] != 0});
  }

  // Unmatched tracks age; stale ones die.
  std::vector<Track> alive;
  alive.reserve(tracks_.size());
  for (std::size_t j = 0; j < tracks_.size(); ++j) {
    Track& track = tracks_[j];
    if (track.last_seen != frame.frame_id) {
      track.misses += 1;
      if (track.misses > cfg_.tracker.max_misses) continue;
    }
    alive.push_back(std::move(track));
  }
  tracks_ = std::move(alive);

  // Publish the final set as the next frame's temporal context. Recovered
  // detections carry their boosted score so they can act as sources.
  prev_dets_.clear();
  prev_dets_.reserve(nf);
  prev_cues_.app.resize(nf, params_.dim());
  prev_cues_.loc.resize(nf, params_.dim());
  prev_cues_.sem.resize(nf, params_.dim());
  prev_m_cue_.resize(nf, params_.dim());
  prev_f_asso_.resize(nf, params_.dim());
  for (int k = 0; k < nf; ++k) {
    const int i = final_idx[k];
    Detection det = working[i];
    det.score = adjusted[i];
    prev_dets_.push_back(std::move(det));
    prev_cues_.app.row(k) = fused.cues.app.row(i);
    prev_cues_.loc.row(k) = fused.cues.loc.row(i);
    prev_cues_.sem.row(k) = fused.cues.sem.row(i);
    prev_m_cue_.row(k) = fused.m_cue.row(i);
    prev_f_asso_.row(k) = f_asso.row(i);
  }
  has_prev_ = true;
  return result;
}

}  // namespace fusetrack::tracker
