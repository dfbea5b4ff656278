#include "fusetrack/io.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace fusetrack::io {

using nlohmann::json;

ParseError::ParseError(std::string file_, long line_, std::string field_,
                       const std::string& what_)
    : std::runtime_error(file_ + ":" + std::to_string(line_) + ": field '" + field_ +
                         "': " + what_),
      file(std::move(file_)),
      line(line_),
      field(std::move(field_)) {}

namespace {

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_vec(std::string& s, const Eigen::VectorXd& v,
                std::string (*fmt)(double)) {
  s += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt(v[i]);
  }
  s += ']';
}

void append_box(std::string& s, const BoundingBox& b) {
  s += '[';
  s += fmt9(b.x1);
  s += ',';
  s += fmt9(b.y1);
  s += ',';
  s += fmt9(b.x2);
  s += ',';
  s += fmt9(b.y2);
  s += ']';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "-", "cannot open file for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "-", "cannot open file");
  return in;
}

// Per-line JSON parse with positional errors.
json parse_line(const std::string& text, const std::string& file, long line) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(file, line, "-", "invalid JSON");
  return j;
}

const json& field(const json& j, const char* key, const std::string& file, long line) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(file, line, key, "missing field");
  return *it;
}

double num_field(const json& j, const char* key, const std::string& file, long line) {
  const json& v = field(j, key, file, line);
  if (!v.is_number()) throw ParseError(file, line, key, "expected a number");
  return v.get<double>();
}

long int_field(const json& j, const char* key, const std::string& file, long line) {
  const json& v = field(j, key, file, line);
  if (!v.is_number_integer()) throw ParseError(file, line, key, "expected an integer");
  return v.get<long>();
}

bool bool_field(const json& j, const char* key, const std::string& file, long line) {
  const json& v = field(j, key, file, line);
  if (!v.is_boolean()) throw ParseError(file, line, key, "expected a boolean");
  return v.get<bool>();
}

Eigen::VectorXd vec_field(const json& j, const char* key, const std::string& file,
                          long line) {
  const json& v = field(j, key, file, line);
  if (!v.is_array()) throw ParseError(file, line, key, "expected an array");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ParseError(file, line, key, "expected numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

BoundingBox box_field(const json& j, const char* key, const std::string& file,
                      long line) {
  const Eigen::VectorXd v = vec_field(j, key, file, line);
  if (v.size() != 4) throw ParseError(file, line, key, "box needs 4 numbers");
  try {
    return BoundingBox(v[0], v[1], v[2], v[3]);
  } catch (const std::invalid_argument& e) {
    throw ParseError(file, line, key, e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& file, const std::string& scope) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ParseError(file, 0, scope.empty() ? key : scope + "." + key,
                       "unknown key");
    }
  }
}

void for_each_line(const std::string& path,
                   const std::function<void(const std::string&, long)>& fn) {
  std::ifstream in = open_in(path);
  std::string text;
  long line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    fn(text, line);
  }
}

std::string detection_json(const Detection& det) {
  std::string s = "{\"box\":";
  append_box(s, det.box);
  s += ",\"score\":";
  s += fmt9(det.score);
  s += ",\"class_id\":";
  s += std::to_string(det.class_id);
  s += ",\"app\":";
  append_vec(s, det.features.app, fmt9);
  s += ",\"sem\":";
  append_vec(s, det.features.sem, fmt9);
  s += '}';
  return s;
}

Detection parse_detection(const json& j, int image_w, int image_h,
                          const std::string& file, long line) {
  Detection det;
  det.box = box_field(j, "box", file, line);
  det.score = num_field(j, "score", file, line);
  if (det.score < 0.0 || det.score > 1.0) {
    throw ParseError(file, line, "score", "score must lie in [0,1]");
  }
  det.class_id = static_cast<int>(int_field(j, "class_id", file, line));
  det.features.app = vec_field(j, "app", file, line);
  det.features.sem = vec_field(j, "sem", file, line);
  if (det.features.app.size() != det.features.sem.size()) {
    throw ParseError(file, line, "sem", "app/sem dimension mismatch");
  }
  det.features.loc = Eigen::VectorXd::Zero(det.features.app.size());
  const std::array<double, 4> raw = normalize_box(det.box, image_w, image_h);
  det.raw_loc = Eigen::Vector4d(raw[0], raw[1], raw[2], raw[3]);
  return det;
}

}  // namespace

std::vector<Frame> read_frames(const std::string& path) {
  std::vector<Frame> frames;
  for_each_line(path, [&](const std::string& text, long line) {
    const json j = parse_line(text, path, line);
    Frame frame;
    frame.frame_id = int_field(j, "frame_id", path, line);
    frame.image_w = static_cast<int>(int_field(j, "image_w", path, line));
    frame.image_h = static_cast<int>(int_field(j, "image_h", path, line));
    if (frame.image_w <= 0 || frame.image_h <= 0) {
      throw ParseError(path, line, "image_w", "image size must be positive");
    }
    const json& dets = field(j, "detections", path, line);
    if (!dets.is_array()) throw ParseError(path, line, "detections", "expected array");
    for (const json& dj : dets) {
      frame.detections.push_back(
          parse_detection(dj, frame.image_w, frame.image_h, path, line));
    }
    frames.push_back(std::move(frame));
  });
  return frames;
}

void write_frames(const std::string& path, const std::vector<Frame>& frames) {
  std::ofstream out = open_out(path);
  for (const Frame& frame : frames) {
    std::string s = "{\"frame_id\":" + std::to_string(frame.frame_id);
    s += ",\"image_w\":" + std::to_string(frame.image_w);
    s += ",\"image_h\":" + std::to_string(frame.image_h);
    s += ",\"detections\":[";
    for (std::size_t i = 0; i < frame.detections.size(); ++i) {
      if (i) s += ',';
      s += detection_json(frame.detections[i]);
    }
    s += "]}";
    out << s << '\n';
  }
}

simgen::ScenarioTruth read_truth(const std::string& path) {
  simgen::ScenarioTruth truth;
  for_each_line(path, [&](const std::string& text, long line) {
    const json j = parse_line(text, path, line);
    truth.frame_ids.push_back(int_field(j, "frame_id", path, line));
    truth.image_w = static_cast<int>(int_field(j, "image_w", path, line));
    truth.image_h = static_cast<int>(int_field(j, "image_h", path, line));
    const json& dets = field(j, "detections", path, line);
    if (!dets.is_array()) throw ParseError(path, line, "detections", "expected array");
    std::vector<simgen::TruthRecord> records;
    for (const json& dj : dets) {
      simgen::TruthRecord rec;
      rec.box = box_field(dj, "box", path, line);
      rec.score = num_field(dj, "score", path, line);
      rec.class_id = static_cast<int>(int_field(dj, "class_id", path, line));
      rec.app = vec_field(dj, "app", path, line);
      rec.sem = vec_field(dj, "sem", path, line);
      rec.identity = static_cast<int>(int_field(dj, "identity", path, line));
      rec.visible = bool_field(dj, "visible", path, line);
      records.push_back(std::move(rec));
    }
    truth.records.push_back(std::move(records));
  });
  return truth;
}

void write_truth(const std::string& path, const simgen::ScenarioTruth& truth) {
  std::ofstream out = open_out(path);
  for (std::size_t f = 0; f < truth.records.size(); ++f) {
    std::string s = "{\"frame_id\":" + std::to_string(truth.frame_ids[f]);
    s += ",\"image_w\":" + std::to_string(truth.image_w);
    s += ",\"image_h\":" + std::to_string(truth.image_h);
    s += ",\"detections\":[";
    for (std::size_t i = 0; i < truth.records[f].size(); ++i) {
      const simgen::TruthRecord& rec = truth.records[f][i];
      if (i) s += ',';
      s += "{\"box\":";
      append_box(s, rec.box);
      s += ",\"score\":";
      s += fmt9(rec.score);
      s += ",\"class_id\":" + std::to_string(rec.class_id);
      s += ",\"app\":";
      append_vec(s, rec.app, fmt9);
      s += ",\"sem\":";
      append_vec(s, rec.sem, fmt9);
      s += ",\"identity\":" + std::to_string(rec.identity);
      s += ",\"visible\":";
      s += rec.visible ? "true" : "false";
      s += '}';
    }
    s += "]}";
    out << s << '\n';
  }
}

EventLog read_events(const std::string& path) {
  EventLog log;
  for_each_line(path, [&](const std::string& text, long line) {
    const json j = parse_line(text, path, line);
    const json& type = field(j, "type", path, line);
    if (type == "flicker") {
      log.flickers.push_back({int_field(j, "frame", path, line),
                              static_cast<int>(int_field(j, "identity", path, line))});
    } else if (type == "occlusion") {
      log.occlusions.push_back(
          {int_field(j, "frame_start", path, line),
           int_field(j, "frame_end", path, line),
           static_cast<int>(int_field(j, "identity", path, line)),
           bool_field(j, "partial", path, line)});
    } else {
      throw ParseError(path, line, "type", "unknown event type");
    }
  });
  return log;
}

void write_events(const std::string& path, const simgen::ScenarioTruth& truth) {
  std::ofstream out = open_out(path);
  for (const simgen::FlickerEvent& ev : truth.flickers) {
    out << "{\"type\":\"flicker\",\"frame\":" << ev.frame
        << ",\"identity\":" << ev.identity << "}\n";
  }
  for (const simgen::OcclusionEvent& ev : truth.occlusions) {
    out << "{\"type\":\"occlusion\",\"frame_start\":" << ev.frame_start
        << ",\"frame_end\":" << ev.frame_end << ",\"identity\":" << ev.identity
        << ",\"partial\":" << (ev.partial ? "true" : "false") << "}\n";
  }
}

std::vector<tracker::FrameResult> read_tracks(const std::string& path) {
  std::vector<tracker::FrameResult> results;
  for_each_line(path, [&](const std::string& text, long line) {
    const json j = parse_line(text, path, line);
    tracker::FrameResult res;
    res.frame_id = int_field(j, "frame_id", path, line);
    const json& tracks = field(j, "tracks", path, line);
    if (!tracks.is_array()) throw ParseError(path, line, "tracks", "expected array");
    for (const json& tj : tracks) {
      tracker::TrackRecord rec;
      rec.track_id = static_cast<int>(int_field(tj, "track_id", path, line));
      rec.box = box_field(tj, "box", path, line);
      rec.class_id = static_cast<int>(int_field(tj, "class_id", path, line));
      rec.score = num_field(tj, "score", path, line);
      rec.recovered = bool_field(tj, "recovered", path, line);
      res.tracks.push_back(std::move(rec));
    }
    results.push_back(std::move(res));
  });
  return results;
}

void write_tracks(const std::string& path,
                  const std::vector<tracker::FrameResult>& results) {
  std::ofstream out = open_out(path);
  for (const tracker::FrameResult& res : results) {
    std::string s = "{\"frame_id\":" + std::to_string(res.frame_id);
    s += ",\"tracks\":[";
    for (std::size_t i = 0; i < res.tracks.size(); ++i) {
      const tracker::TrackRecord& rec = res.tracks[i];
      if (i) s += ',';
      s += "{\"track_id\":" + std::to_string(rec.track_id);
      s += ",\"box\":";
      append_box(s, rec.box);
      s += ",\"class_id\":" + std::to_string(rec.class_id);
      s += ",\"score\":";
      s += fmt9(rec.score);
      s += ",\"recovered\":";
      s += rec.recovered ? "true" : "false";
      s += '}';
    }
    s += "]}";
    out << s << '\n';
  }
}

namespace {

FusionMode fusion_from_string(const std::string& s, const std::string& file) {
  if (s == "adaptive") return FusionMode::kAdaptive;
  if (s == "sum") return FusionMode::kSum;
  throw ParseError(file, 0, "mcf.fusion", "expected 'adaptive' or 'sum'");
}

Assignment assignment_from_string(const std::string& s, const std::string& file) {
  if (s == "greedy") return Assignment::kGreedy;
  if (s == "optimal") return Assignment::kOptimal;
  throw ParseError(file, 0, "tracker.assignment", "expected 'greedy' or 'optimal'");
}

Representative representative_from_string(const std::string& s,
                                          const std::string& file) {
  if (s == "mean") return Representative::kMean;
  if (s == "max_sim") return Representative::kMaxSim;
  throw ParseError(file, 0, "tracker.representative", "expected 'mean' or 'max_sim'");
}

template <class T>
void maybe(const json& j, const char* key, T& slot) {
  const auto it = j.find(key);
  if (it != j.end()) slot = it->get<T>();
}

}  // namespace

EngineConfig parse_engine_config(const std::string& text, const std::string& file) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(file, 0, "-", "invalid JSON");
  reject_unknown(j, {"mcf", "mga", "tcp", "tracker", "learn"}, file, "");

  EngineConfig cfg;
  if (j.contains("mcf")) {
    const json& m = j["mcf"];
    reject_unknown(m, {"d", "h", "delta", "epsilon", "fusion"}, file, "mcf");
    maybe(m, "d", cfg.mcf.d);
    maybe(m, "h", cfg.mcf.h);
    maybe(m, "delta", cfg.mcf.delta);
    maybe(m, "epsilon", cfg.mcf.epsilon);
    if (m.contains("fusion")) {
      cfg.mcf.fusion = fusion_from_string(m["fusion"].get<std::string>(), file);
    }
  }
  if (j.contains("mga")) {
    const json& m = j["mga"];
    reject_unknown(m, {"tau_ioc", "tau_q", "lambda"}, file, "mga");
    maybe(m, "tau_ioc", cfg.mga.tau_ioc);
    maybe(m, "tau_q", cfg.mga.tau_q);
    maybe(m, "lambda", cfg.mga.lambda);
  }
  if (j.contains("tcp")) {
    const json& m = j["tcp"];
    reject_unknown(m,
                   {"tau_high", "tau_low", "beta", "candidate_cap", "nms_iou", "tiers"},
                   file, "tcp");
    maybe(m, "tau_high", cfg.tcp.tau_high);
    maybe(m, "tau_low", cfg.tcp.tau_low);
    maybe(m, "beta", cfg.tcp.beta);
    maybe(m, "candidate_cap", cfg.tcp.candidate_cap);
    maybe(m, "nms_iou", cfg.tcp.nms_iou);
    if (m.contains("tiers")) {
      if (!m["tiers"].is_array()) throw ParseError(file, 0, "tcp.tiers", "expected array");
      cfg.tcp.tiers.clear();
      for (const json& tj : m["tiers"]) {
        reject_unknown(tj, {"min_mean_w", "min_count", "eta"}, file, "tcp.tiers");
        TcpTier tier;
        maybe(tj, "min_mean_w", tier.min_mean_w);
        maybe(tj, "min_count", tier.min_count);
        maybe(tj, "eta", tier.eta);
        cfg.tcp.tiers.push_back(tier);
      }
    }
  }
  if (j.contains("tracker")) {
    const json& m = j["tracker"];
    reject_unknown(m,
                   {"match_threshold", "memory_len", "max_detections", "max_misses",
                    "nms_iou", "assignment", "representative"},
                   file, "tracker");
    maybe(m, "match_threshold", cfg.tracker.match_threshold);
    maybe(m, "memory_len", cfg.tracker.memory_len);
    maybe(m, "max_detections", cfg.tracker.max_detections);
    maybe(m, "max_misses", cfg.tracker.max_misses);
    maybe(m, "nms_iou", cfg.tracker.nms_iou);
    if (m.contains("assignment")) {
      cfg.tracker.assignment =
          assignment_from_string(m["assignment"].get<std::string>(), file);
    }
    if (m.contains("representative")) {
      cfg.tracker.representative =
          representative_from_string(m["representative"].get<std::string>(), file);
    }
  }
  if (j.contains("learn")) {
    const json& m = j["learn"];
    reject_unknown(m, {"lr", "epochs", "seed", "beta1", "beta2", "eps_stab"}, file,
                   "learn");
    maybe(m, "lr", cfg.learn.lr);
    maybe(m, "epochs", cfg.learn.epochs);
    maybe(m, "seed", cfg.learn.seed);
    maybe(m, "beta1", cfg.learn.beta1);
    maybe(m, "beta2", cfg.learn.beta2);
    maybe(m, "eps_stab", cfg.learn.eps_stab);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(file, 0, "-", e.what());
  }
  return cfg;
}

EngineConfig read_engine_config(const std::string& path) {
  std::ifstream in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_engine_config(buf.str(), path);
}

std::string engine_config_json(const EngineConfig& cfg) {
  std::string s = "{\"mcf\":{";
  s += "\"d\":" + std::to_string(cfg.mcf.d);
  s += ",\"h\":" + std::to_string(cfg.mcf.h);
  s += ",\"delta\":" + fmt9(cfg.mcf.delta);
  s += ",\"epsilon\":" + fmt9(cfg.mcf.epsilon);
  s += ",\"fusion\":\"" + to_string(cfg.mcf.fusion) + "\"";
  s += "},\"mga\":{";
  s += "\"tau_ioc\":" + fmt9(cfg.mga.tau_ioc);
  s += ",\"tau_q\":" + fmt9(cfg.mga.tau_q);
  s += ",\"lambda\":" + fmt9(cfg.mga.lambda);
  s += "},\"tcp\":{";
  s += "\"tau_high\":" + fmt9(cfg.tcp.tau_high);
  s += ",\"tau_low\":" + fmt9(cfg.tcp.tau_low);
  s += ",\"beta\":" + fmt9(cfg.tcp.beta);
  s += ",\"candidate_cap\":" + std::to_string(cfg.tcp.candidate_cap);
  s += ",\"nms_iou\":" + fmt9(cfg.tcp.nms_iou);
  s += ",\"tiers\":[";
  for (std::size_t i = 0; i < cfg.tcp.tiers.size(); ++i) {
    if (i) s += ',';
    s += "{\"min_mean_w\":" + fmt9(cfg.tcp.tiers[i].min_mean_w);
    s += ",\"min_count\":" + std::to_string(cfg.tcp.tiers[i].min_count);
    s += ",\"eta\":" + fmt9(cfg.tcp.tiers[i].eta) + "}";
  }
  s += "]},\"tracker\":{";
  s += "\"match_threshold\":" + fmt9(cfg.tracker.match_threshold);
  s += ",\"memory_len\":" + std::to_string(cfg.tracker.memory_len);
  s += ",\"max_detections\":" + std::to_string(cfg.tracker.max_detections);
  s += ",\"max_misses\":" + std::to_string(cfg.tracker.max_misses);
  s += ",\"nms_iou\":" + fmt9(cfg.tracker.nms_iou);
  s += ",\"assignment\":\"" + to_string(cfg.tracker.assignment) + "\"";
  s += ",\"representative\":\"" + to_string(cfg.tracker.representative) + "\"";
  s += "},\"learn\":{";
  s += "\"lr\":" + fmt9(cfg.learn.lr);
  s += ",\"epochs\":" + std::to_string(cfg.learn.epochs);
  s += ",\"seed\":" + std::to_string(cfg.learn.seed);
  s += ",\"beta1\":" + fmt9(cfg.learn.beta1);
  s += ",\"beta2\":" + fmt9(cfg.learn.beta2);
  s += ",\"eps_stab\":" + fmt9(cfg.learn.eps_stab);
  s += "}}";
  return s;
}

simgen::ScenarioConfig parse_scenario_config(const std::string& text,
                                             const std::string& file) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(file, 0, "-", "invalid JSON");
  reject_unknown(
      j,
      {"seed",           "image_w",          "image_h",
       "num_frames",     "num_objects",      "num_categories",
       "novel_fraction", "min_speed",        "max_speed",
       "turn_prob",      "min_obj_size",     "max_obj_size",
       "embed_dim",      "embed_scale",      "app_noise",        "sem_noise",
       "sem_noise_novel", "app_within_class_spread", "score_lo",
       "score_hi",       "flicker_prob",     "flicker_lo",
       "flicker_hi",     "flicker_frames",   "flicker_identities",
       "occlusion_prob", "occlusion_min_len", "occlusion_max_len",
       "occlusion_drift", "child_spawn_prob", "children_per_parent",
       "child_same_class", "clutter_rate"},
      file, "");

  simgen::ScenarioConfig cfg;
  maybe(j, "seed", cfg.seed);
  maybe(j, "image_w", cfg.image_w);
  maybe(j, "image_h", cfg.image_h);
  maybe(j, "num_frames", cfg.num_frames);
  maybe(j, "num_objects", cfg.num_objects);
  maybe(j, "num_categories", cfg.num_categories);
  maybe(j, "novel_fraction", cfg.novel_fraction);
  maybe(j, "min_speed", cfg.min_speed);
  maybe(j, "max_speed", cfg.max_speed);
  maybe(j, "turn_prob", cfg.turn_prob);
  maybe(j, "min_obj_size", cfg.min_obj_size);
  maybe(j, "max_obj_size", cfg.max_obj_size);
  maybe(j, "embed_dim", cfg.embed_dim);
  maybe(j, "embed_scale", cfg.embed_scale);
  maybe(j, "app_noise", cfg.app_noise);
  maybe(j, "sem_noise", cfg.sem_noise);
  maybe(j, "sem_noise_novel", cfg.sem_noise_novel);
  maybe(j, "app_within_class_spread", cfg.app_within_class_spread);
  maybe(j, "score_lo", cfg.score_lo);
  maybe(j, "score_hi", cfg.score_hi);
  maybe(j, "flicker_prob", cfg.flicker_prob);
  maybe(j, "flicker_lo", cfg.flicker_lo);
  maybe(j, "flicker_hi", cfg.flicker_hi);
  maybe(j, "flicker_frames", cfg.flicker_frames);
  maybe(j, "flicker_identities", cfg.flicker_identities);
  maybe(j, "occlusion_prob", cfg.occlusion_prob);
  maybe(j, "occlusion_min_len", cfg.occlusion_min_len);
  maybe(j, "occlusion_max_len", cfg.occlusion_max_len);
  maybe(j, "occlusion_drift", cfg.occlusion_drift);
  maybe(j, "child_spawn_prob", cfg.child_spawn_prob);
  maybe(j, "children_per_parent", cfg.children_per_parent);
  maybe(j, "child_same_class", cfg.child_same_class);
  maybe(j, "clutter_rate", cfg.clutter_rate);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(file, 0, "-", e.what());
  }
  return cfg;
}

simgen::ScenarioConfig read_scenario_config(const std::string& path) {
  std::ifstream in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_config(buf.str(), path);
}

std::string scenario_config_json(const simgen::ScenarioConfig& cfg) {
  std::string s = "{";
  s += "\"seed\":" + std::to_string(cfg.seed);
  s += ",\"image_w\":" + std::to_string(cfg.image_w);
  s += ",\"image_h\":" + std::to_string(cfg.image_h);
  s += ",\"num_frames\":" + std::to_string(cfg.num_frames);
  s += ",\"num_objects\":" + std::to_string(cfg.num_objects);
  s += ",\"num_categories\":" + std::to_string(cfg.num_categories);
  s += ",\"novel_fraction\":" + fmt9(cfg.novel_fraction);
  s += ",\"min_speed\":" + fmt9(cfg.min_speed);
  s += ",\"max_speed\":" + fmt9(cfg.max_speed);
  s += ",\"turn_prob\":" + fmt9(cfg.turn_prob);
  s += ",\"min_obj_size\":" + fmt9(cfg.min_obj_size);
  s += ",\"max_obj_size\":" + fmt9(cfg.max_obj_size);
  s += ",\"embed_dim\":" + std::to_string(cfg.embed_dim);
  s += ",\"embed_scale\":" + fmt9(cfg.embed_scale);
  s += ",\"app_noise\":" + fmt9(cfg.app_noise);
  s += ",\"sem_noise\":" + fmt9(cfg.sem_noise);
  s += ",\"sem_noise_novel\":" + fmt9(cfg.sem_noise_novel);
  s += ",\"app_within_class_spread\":" + fmt9(cfg.app_within_class_spread);
  s += ",\"score_lo\":" + fmt9(cfg.score_lo);
  s += ",\"score_hi\":" + fmt9(cfg.score_hi);
  s += ",\"flicker_prob\":" + fmt9(cfg.flicker_prob);
  s += ",\"flicker_lo\":" + fmt9(cfg.flicker_lo);
  s += ",\"flicker_hi\":" + fmt9(cfg.flicker_hi);
  s += ",\"flicker_frames\":[";
  for (std::size_t i = 0; i < cfg.flicker_frames.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(cfg.flicker_frames[i]);
  }
  s += "],\"flicker_identities\":[";
  for (std::size_t i = 0; i < cfg.flicker_identities.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(cfg.flicker_identities[i]);
  }
  s += "],\"occlusion_prob\":" + fmt9(cfg.occlusion_prob);
  s += ",\"occlusion_min_len\":" + std::to_string(cfg.occlusion_min_len);
  s += ",\"occlusion_max_len\":" + std::to_string(cfg.occlusion_max_len);
  s += ",\"occlusion_drift\":" + fmt9(cfg.occlusion_drift);
  s += ",\"child_spawn_prob\":" + fmt9(cfg.child_spawn_prob);
  s += ",\"children_per_parent\":" + std::to_string(cfg.children_per_parent);
  s += ",\"child_same_class\":";
  s += cfg.child_same_class ? "true" : "false";
  s += ",\"clutter_rate\":" + fmt9(cfg.clutter_rate);
  s += "}";
  return s;
}

std::string config_fingerprint(const EngineConfig& cfg) {
  const std::string text = engine_config_json(cfg);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& fingerprint) {
  std::ofstream out = open_out(path);
  const std::vector<const Eigen::MatrixXd*> tensors = tensor_list(params);
  const std::vector<std::string> names = tensor_names();
  std::string s = "{\"version\":1";
  s += ",\"config_fingerprint\":\"" + fingerprint + "\"";
  s += ",\"d\":" + std::to_string(params.dim());
  s += ",\"h\":" + std::to_string(params.mcf.sgn_w1.rows());
  s += ",\"tensors\":{";
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    if (k) s += ',';
    s += "\"" + names[k] + "\":{\"rows\":" + std::to_string(tensors[k]->rows());
    s += ",\"cols\":" + std::to_string(tensors[k]->cols());
    s += ",\"data\":[";
    bool first = true;
    for (Eigen::Index r = 0; r < tensors[k]->rows(); ++r) {
      for (Eigen::Index c = 0; c < tensors[k]->cols(); ++c) {
        if (!first) s += ',';
        first = false;
        s += fmt17((*tensors[k])(r, c));
      }
    }
    s += "]}";
  }
  s += "}}";
  out << s << '\n';
}

ModelParams load_checkpoint(const std::string& path, std::string* fingerprint_out) {
  std::ifstream in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw ParseError(path, 0, "-", "invalid JSON");
  if (int_field(j, "version", path, 1) != 1) {
    throw ParseError(path, 1, "version", "unsupported checkpoint version");
  }
  if (fingerprint_out != nullptr) {
    *fingerprint_out = field(j, "config_fingerprint", path, 1).get<std::string>();
  }
  const json& tensors = field(j, "tensors", path, 1);
  ModelParams params;
  std::vector<Eigen::MatrixXd*> slots = tensor_list(params);
  const std::vector<std::string> names = tensor_names();
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto it = tensors.find(names[k]);
    if (it == tensors.end()) throw ParseError(path, 1, names[k], "missing tensor");
    const long rows = int_field(*it, "rows", path, 1);
    const long cols = int_field(*it, "cols", path, 1);
    const json& data = field(*it, "data", path, 1);
    if (!data.is_array() || static_cast<long>(data.size()) != rows * cols) {
      throw ParseError(path, 1, names[k], "tensor data size mismatch");
    }
    slots[k]->resize(rows, cols);
    std::size_t at = 0;
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        (*slots[k])(r, c) = data[at++].get<double>();
      }
    }
  }
  try {
    params.check();
  } catch (const std::invalid_argument& e) {
    throw ParseError(path, 1, "tensors", e.what());
  }
  return params;
}

void write_loss_curve(const std::string& path, const std::vector<double>& epoch_loss) {
  std::ofstream out = open_out(path);
  out << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    out << e << ',' << fmt9(epoch_loss[e]) << '\n';
  }
}

std::string report_json(const metrics::EvalReport& report) {
  std::string s = "{";
  s += "\"loc_recall\":" + fmt9(report.loc_recall);
  s += ",\"loc_precision\":" + fmt9(report.loc_precision);
  s += ",\"assoc_accuracy\":" + fmt9(report.assoc_accuracy);
  s += ",\"cls_accuracy\":" + fmt9(report.cls_accuracy);
  s += ",\"detection_recovery_rate\":" + fmt9(report.detection_recovery_rate);
  s += ",\"id_switches\":" + std::to_string(report.id_switches);
  s += "}";
  return s;
}

std::string stats_json(const metrics::ContinuityStats& stats) {
  std::string s = "{";
  s += "\"mean_iou\":" + fmt9(stats.mean_iou);
  s += ",\"mean_area_ratio\":" + fmt9(stats.mean_area_ratio);
  s += ",\"mean_displacement\":" + fmt9(stats.mean_displacement);
  s += ",\"annotations_per_track\":" + fmt9(stats.annotations_per_track);
  s += ",\"frames_per_track\":" + fmt9(stats.frames_per_track);
  s += "}";
  return s;
}

}  // namespace fusetrack::io
