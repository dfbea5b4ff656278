#pragma once

#include <vector>

#include "fusetrack/simgen.hpp"
#include "fusetrack/tracker.hpp"

namespace fusetrack::metrics {

struct EvalReport {
  double loc_recall = 0.0;     // visible truth boxes matched at IoU >= 0.5
  double loc_precision = 0.0;  // output boxes matched to truth
  double assoc_accuracy = 0.0; // matched outputs consistent with the majority track
  double cls_accuracy = 0.0;   // matched outputs with the right class
  double detection_recovery_rate = 1.0;  // flicker events present in the output
  long id_switches = 0;
};

struct ContinuityStats {
  double mean_iou = 0.0;
  double mean_area_ratio = 0.0;    // max/min area per consecutive pair, >= 1
  double mean_displacement = 0.0;  // center distance in pixels
  double annotations_per_track = 0.0;
  double frames_per_track = 0.0;   // span from first to last visible record
};

/// Frame-by-frame greedy IoU matching (threshold 0.5) between output tracks
/// and visible truth records, followed by a majority track-per-identity
/// mapping. Throws when the output frame range differs from the truth's.
EvalReport evaluate(const std::vector<tracker::FrameResult>& output,
                    const simgen::ScenarioTruth& truth);

/// Per-track statistics over consecutive visible records. Tracks with fewer
/// than two visible records are excluded from the pairwise means.
ContinuityStats continuity_stats(const simgen::ScenarioTruth& truth);

}  // namespace fusetrack::metrics
