#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "fusetrack/config.hpp"
#include "fusetrack/metrics.hpp"
#include "fusetrack/model.hpp"
#include "fusetrack/simgen.hpp"
#include "fusetrack/tracker.hpp"
#include "fusetrack/types.hpp"

namespace fusetrack::io {

/// Carries the file, 1-based line and field of a malformed input.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, long line, std::string field, const std::string& what);

  const std::string file;
  const long line;
  const std::string field;
};

// Detection streams: one frame per line,
// {"frame_id":..,"image_w":..,"image_h":..,"detections":[{"box":[x1,y1,x2,y2],
//  "score":..,"class_id":..,"app":[..],"sem":[..]}, ...]}
// Floats carry 9 significant digits; loc embeddings are derived inside the
// engine and never serialized.
std::vector<Frame> read_frames(const std::string& path);
void write_frames(const std::string& path, const std::vector<Frame>& frames);

// Truth streams mirror detection lines with "identity" and "visible" added
// to every record.
simgen::ScenarioTruth read_truth(const std::string& path);
void write_truth(const std::string& path, const simgen::ScenarioTruth& truth);

// Event log: one JSON object per line, discriminated by "type".
struct EventLog {
  std::vector<simgen::FlickerEvent> flickers;
  std::vector<simgen::OcclusionEvent> occlusions;
};
EventLog read_events(const std::string& path);
void write_events(const std::string& path, const simgen::ScenarioTruth& truth);

// Track output: {"frame_id":..,"tracks":[{"track_id":..,"box":[..],
//  "class_id":..,"score":..,"recovered":..}, ...]}
std::vector<tracker::FrameResult> read_tracks(const std::string& path);
void write_tracks(const std::string& path,
                  const std::vector<tracker::FrameResult>& results);

// Engine configuration; unknown keys are rejected, every field defaults.
EngineConfig read_engine_config(const std::string& path);
EngineConfig parse_engine_config(const std::string& text, const std::string& file);
std::string engine_config_json(const EngineConfig& cfg);

simgen::ScenarioConfig read_scenario_config(const std::string& path);
simgen::ScenarioConfig parse_scenario_config(const std::string& text,
                                             const std::string& file);
std::string scenario_config_json(const simgen::ScenarioConfig& cfg);

/// FNV-1a hash of the canonical config serialization, as hex.
std::string config_fingerprint(const EngineConfig& cfg);

// Checkpoint: versioned JSON container of all parameter tensors at full
// round-trip precision, stamped with the training config fingerprint.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& fingerprint);
ModelParams load_checkpoint(const std::string& path,
                            std::string* fingerprint_out = nullptr);

void write_loss_curve(const std::string& path, const std::vector<double>& epoch_loss);

std::string report_json(const metrics::EvalReport& report);
std::string stats_json(const metrics::ContinuityStats& stats);

}  // namespace fusetrack::io
