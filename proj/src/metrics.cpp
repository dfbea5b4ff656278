#include "fusetrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fusetrack::metrics {

namespace {

constexpr double kMatchIou = 0.5;

struct MatchedObs {
  std::int64_t frame;
  int track_id;
  bool class_correct;
};

}  // namespace

EvalReport evaluate(const std::vector<tracker::FrameResult>& output,
                    const simgen::ScenarioTruth& truth) {
  if (output.size() != truth.frame_ids.size()) {
    throw std::invalid_argument("evaluate: frame range mismatch");
  }
  for (std::size_t f = 0; f < output.size(); ++f) {
    if (output[f].frame_id != truth.frame_ids[f]) {
      throw std::invalid_argument("evaluate: frame id mismatch");
    }
  }

  long total_gt = 0, total_out = 0, matched = 0, cls_correct = 0;
  // Time-ordered matched observations per identity.
  std::map<int, std::vector<MatchedObs>> per_identity;
  // (frame, identity) -> matched flag, for the recovery rate.
  std::map<std::pair<std::int64_t, int>, bool> matched_at;

  for (std::size_t f = 0; f < output.size(); ++f) {
    std::vector<const simgen::TruthRecord*> gt;
    for (const simgen::TruthRecord& rec : truth.records[f]) {
      if (rec.visible) gt.push_back(&rec);
    }
    const std::vector<tracker::TrackRecord>& out = output[f].tracks;
    total_gt += static_cast<long>(gt.size());
    total_out += static_cast<long>(out.size());

    // All pairs above the IoU floor, best first; deterministic tie-break.
    struct Pair {
      double iou;
      int g, o;
    };
    std::vector<Pair> pairs;
    for (int g = 0; g < static_cast<int>(gt.size()); ++g) {
      for (int o = 0; o < static_cast<int>(out.size()); ++o) {
        const double v = iou(gt[g]->box, out[o].box);
        if (v >= kMatchIou) pairs.push_back({v, g, o});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.iou != b.iou) return a.iou > b.iou;
      if (a.g != b.g) return a.g < b.g;
      return a.o < b.o;
    });
    std::vector<char> g_used(gt.size(), 0), o_used(out.size(), 0);
    for (const Pair& p : pairs) {
      if (g_used[p.g] || o_used[p.o]) continue;
      g_used[p.g] = 1;
      o_used[p.o] = 1;
      matched += 1;
      const bool cls_ok = gt[p.g]->class_id == out[p.o].class_id;
      if (cls_ok) cls_correct += 1;
      per_identity[gt[p.g]->identity].push_back(
          {output[f].frame_id, out[p.o].track_id, cls_ok});
      matched_at[{output[f].frame_id, gt[p.g]->identity}] = true;
    }
  }

  // Majority track per identity; smaller track id wins ties.
  long assoc_correct = 0;
  long switches = 0;
  for (const auto& [identity, obs] : per_identity) {
    std::map<int, int> votes;
    for (const MatchedObs& m : obs) votes[m.track_id] += 1;
    int majority = -1, best = -1;
    for (const auto& [track_id, count] : votes) {
      if (count > best) {
        best = count;
        majority = track_id;
      }
    }
    for (std::size_t k = 0; k < obs.size(); ++k) {
      if (obs[k].track_id == majority) assoc_correct += 1;
      if (k > 0 && obs[k].track_id != obs[k - 1].track_id) switches += 1;
    }
  }

  EvalReport report;
  report.loc_recall = total_gt > 0 ? static_cast<double>(matched) / total_gt : 0.0;
  report.loc_precision =
      total_out > 0 ? static_cast<double>(matched) / total_out : 0.0;
  report.assoc_accuracy =
      matched > 0 ? static_cast<double>(assoc_correct) / matched : 0.0;
  report.cls_accuracy = matched > 0 ? static_cast<double>(cls_correct) / matched : 0.0;
  report.id_switches = switches;
  if (!truth.flickers.empty()) {
    long recovered = 0;
    for (const simgen::FlickerEvent& ev : truth.flickers) {
      const auto it = matched_at.find({ev.frame, ev.identity});
      if (it != matched_at.end() && it->second) recovered += 1;
    }
    report.detection_recovery_rate =
        static_cast<double>(recovered) / static_cast<double>(truth.flickers.size());
  }
  return report;
}

ContinuityStats continuity_stats(const simgen::ScenarioTruth& truth) {
  // Visible records per identity, in frame order.
  std::map<int, std::vector<std::pair<std::int64_t, const simgen::TruthRecord*>>>
      tracks;
  for (std::size_t f = 0; f < truth.records.size(); ++f) {
    for (const simgen::TruthRecord& rec : truth.records[f]) {
      if (rec.visible) tracks[rec.identity].push_back({truth.frame_ids[f], &rec});
    }
  }

  ContinuityStats stats;
  double iou_sum = 0, ratio_sum = 0, disp_sum = 0;
  long pair_count = 0;
  double ann_sum = 0, span_sum = 0;
  long track_count = 0;
  for (const auto& [identity, recs] : tracks) {
    track_count += 1;
    ann_sum += static_cast<double>(recs.size());
    span_sum += static_cast<double>(recs.back().first - recs.front().first + 1);
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
      const BoundingBox& a = recs[k].second->box;
      const BoundingBox& b = recs[k + 1].second->box;
      iou_sum += iou(a, b);
      const double a1 = a.area(), a2 = b.area();
      ratio_sum += std::max(a1, a2) / std::min(a1, a2);
      disp_sum += std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
      pair_count += 1;
    }
  }
  if (pair_count > 0) {
    stats.mean_iou = iou_sum / pair_count;
    stats.mean_area_ratio = ratio_sum / pair_count;
    stats.mean_displacement = disp_sum / pair_count;
  }
  if (track_count > 0) {
    stats.annotations_per_track = ann_sum / track_count;
    stats.frames_per_track = span_sum / track_count;
  }
  return stats;
}

}  // namespace fusetrack::metrics
