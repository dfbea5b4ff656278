// Command-line front end: scenario synthesis, training, tracking, evaluation,
// continuity statistics, and the module ablation harness.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fusetrack/io.hpp"
#include "fusetrack/learn.hpp"
#include "fusetrack/metrics.hpp"
#include "fusetrack/simgen.hpp"
#include "fusetrack/tracker.hpp"

namespace {

using namespace fusetrack;

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

int fail(const std::exception& e) {
  if (const auto* pe = dynamic_cast<const io::ParseError*>(&e)) {
    std::cerr << "{\"error\":\"" << json_escape(e.what()) << "\",\"file\":\""
              << json_escape(pe->file) << "\",\"line\":" << pe->line
              << ",\"field\":\"" << json_escape(pe->field) << "\"}" << std::endl;
  } else {
    std::cerr << "{\"error\":\"" << json_escape(e.what()) << "\"}" << std::endl;
  }
  return 1;
}

void apply_ablation_flags(EngineConfig& cfg, bool no_tcp, bool no_mga,
                          bool naive_fusion) {
  if (no_tcp) {
    for (TcpTier& tier : cfg.tcp.tiers) tier.eta = 0.0;
  }
  if (no_mga) cfg.mga.lambda = 0.0;
  if (naive_fusion) cfg.mcf.fusion = FusionMode::kSum;
}

int stream_dim(const std::vector<Frame>& frames) {
  for (const Frame& f : frames) {
    if (!f.detections.empty()) return f.detections.front().features.dim();
  }
  return -1;
}

void check_stream_dim(const std::vector<Frame>& frames, int d) {
  const int sd = stream_dim(frames);
  if (sd > 0 && sd != d) {
    throw std::runtime_error("embedding dimension mismatch: stream has d=" +
                             std::to_string(sd) + " but the engine expects d=" +
                             std::to_string(d) + " (set mcf.d in the config)");
  }
}

std::vector<tracker::FrameResult> run_tracker(const std::vector<Frame>& frames,
                                              const ModelParams& params,
                                              const EngineConfig& cfg) {
  tracker::Tracker tk(params, cfg);
  std::vector<tracker::FrameResult> results;
  results.reserve(frames.size());
  for (const Frame& frame : frames) results.push_back(tk.step(frame));
  return results;
}

void print_report_table(const std::vector<std::string>& names,
                        const std::vector<metrics::EvalReport>& reports) {
  std::printf("%-8s %12s %14s %15s %13s %9s %12s\n", "config", "loc_recall",
              "loc_precision", "assoc_accuracy", "cls_accuracy", "recovery",
              "id_switches");
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const metrics::EvalReport& r = reports[i];
    std::printf("%-8s %12.6f %14.6f %15.6f %13.6f %9.6f %12ld\n", names[i].c_str(),
                r.loc_recall, r.loc_precision, r.assoc_accuracy, r.cls_accuracy,
                r.detection_recovery_rate, r.id_switches);
  }
}

simgen::ScenarioTruth with_events(simgen::ScenarioTruth truth,
                                  const std::optional<std::string>& events_path) {
  if (events_path) {
    const io::EventLog log = io::read_events(*events_path);
    truth.flickers = log.flickers;
    truth.occlusions = log.occlusions;
  }
  return truth;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-vocabulary multi-object tracking association engine"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scenario");
  std::string sim_scenario, sim_out_dir;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--scenario", sim_scenario, "Scenario config JSON (defaults apply)");
  sim->add_option("--out-dir", sim_out_dir, "Output directory")->required();
  sim->add_option("--seed", sim_seed, "Override the scenario seed");

  // train
  auto* tr = app.add_subcommand("train", "Train the fusion and attention weights");
  std::string tr_frames, tr_truth, tr_config, tr_ckpt, tr_curve;
  std::optional<std::uint64_t> tr_seed;
  tr->add_option("--frames", tr_frames, "Detection stream JSONL")->required();
  tr->add_option("--truth", tr_truth, "Truth JSONL")->required();
  tr->add_option("--config", tr_config, "Engine config JSON");
  tr->add_option("--checkpoint-out", tr_ckpt, "Checkpoint output path")->required();
  tr->add_option("--loss-curve", tr_curve, "Loss curve CSV output path");
  tr->add_option("--seed", tr_seed, "Override learn.seed");

  // track
  auto* tk = app.add_subcommand("track", "Run the tracker over a detection stream");
  std::string tk_frames, tk_ckpt, tk_config, tk_out;
  bool tk_no_tcp = false, tk_no_mga = false, tk_naive = false;
  tk->add_option("--frames", tk_frames, "Detection stream JSONL")->required();
  tk->add_option("--checkpoint", tk_ckpt, "Checkpoint path (reference preset if omitted)");
  tk->add_option("--config", tk_config, "Engine config JSON");
  tk->add_option("--out", tk_out, "Track output JSONL")->required();
  tk->add_flag("--no-tcp", tk_no_tcp, "Disable confidence recovery");
  tk->add_flag("--no-mga", tk_no_mga, "Disable hierarchical enhancement");
  tk->add_flag("--naive-fusion", tk_naive, "Replace adaptive fusion with summation");

  // eval
  auto* ev = app.add_subcommand("eval", "Score a track output against truth");
  std::string ev_tracks, ev_truth, ev_out;
  std::optional<std::string> ev_events;
  ev->add_option("--tracks", ev_tracks, "Track output JSONL")->required();
  ev->add_option("--truth", ev_truth, "Truth JSONL")->required();
  ev->add_option("--events", ev_events, "Event log JSONL (enables recovery rate)");
  ev->add_option("--out", ev_out, "Report JSON output path");

  // stats
  auto* st = app.add_subcommand("stats", "Continuity statistics of an annotation stream");
  std::string st_truth, st_out;
  st->add_option("--truth", st_truth, "Truth JSONL")->required();
  st->add_option("--out", st_out, "Stats JSON output path");

  // ablate
  auto* ab = app.add_subcommand("ablate", "Evaluate full/no-MCF/no-MGA/no-TCP variants");
  std::string ab_frames, ab_truth, ab_ckpt, ab_config, ab_out;
  std::optional<std::string> ab_events;
  ab->add_option("--frames", ab_frames, "Detection stream JSONL")->required();
  ab->add_option("--truth", ab_truth, "Truth JSONL")->required();
  ab->add_option("--checkpoint", ab_ckpt, "Checkpoint path (reference preset if omitted)");
  ab->add_option("--config", ab_config, "Engine config JSON");
  ab->add_option("--events", ab_events, "Event log JSONL");
  ab->add_option("--out", ab_out, "Report JSON output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      simgen::ScenarioConfig cfg;
      if (!sim_scenario.empty()) cfg = io::read_scenario_config(sim_scenario);
      if (sim_seed) cfg.seed = *sim_seed;
      const simgen::Scenario scenario = simgen::generate(cfg);
      std::filesystem::create_directories(sim_out_dir);
      io::write_frames(sim_out_dir + "/frames.jsonl", scenario.frames);
      io::write_truth(sim_out_dir + "/truth.jsonl", scenario.truth);
      io::write_events(sim_out_dir + "/events.jsonl", scenario.truth);
      std::cout << "wrote " << scenario.frames.size() << " frames to " << sim_out_dir
                << std::endl;
      return 0;
    }

    if (*tr) {
      EngineConfig cfg;
      if (!tr_config.empty()) cfg = io::read_engine_config(tr_config);
      if (tr_seed) cfg.learn.seed = *tr_seed;
      const std::vector<Frame> frames = io::read_frames(tr_frames);
      check_stream_dim(frames, cfg.mcf.d);
      const simgen::ScenarioTruth truth = io::read_truth(tr_truth);
      const std::vector<learn::TrainingPair> pairs =
          simgen::to_training_pairs(frames, truth);
      const learn::TrainResult result =
          learn::train(pairs, cfg, cfg.learn.epochs, cfg.learn.seed);
      io::save_checkpoint(tr_ckpt, result.params, io::config_fingerprint(cfg));
      if (!tr_curve.empty()) io::write_loss_curve(tr_curve, result.epoch_loss);
      if (!result.epoch_loss.empty()) {
        std::printf("trained %d epochs over %zu pairs; loss %.6f -> %.6f\n",
                    cfg.learn.epochs, pairs.size(), result.epoch_loss.front(),
                    result.epoch_loss.back());
      }
      return 0;
    }

    if (*tk) {
      EngineConfig cfg;
      if (!tk_config.empty()) cfg = io::read_engine_config(tk_config);
      apply_ablation_flags(cfg, tk_no_tcp, tk_no_mga, tk_naive);
      const std::vector<Frame> frames = io::read_frames(tk_frames);
      check_stream_dim(frames, cfg.mcf.d);
      const ModelParams params = tk_ckpt.empty()
                                     ? ModelParams::reference(cfg.mcf.d)
                                     : io::load_checkpoint(tk_ckpt);
      if (params.dim() != cfg.mcf.d) {
        throw std::runtime_error("checkpoint dimension d=" +
                                 std::to_string(params.dim()) +
                                 " does not match config mcf.d");
      }
      io::write_tracks(tk_out, run_tracker(frames, params, cfg));
      return 0;
    }

    if (*ev) {
      const std::vector<tracker::FrameResult> tracks = io::read_tracks(ev_tracks);
      const simgen::ScenarioTruth truth =
          with_events(io::read_truth(ev_truth), ev_events);
      const metrics::EvalReport report = metrics::evaluate(tracks, truth);
      print_report_table({"run"}, {report});
      const std::string json = io::report_json(report);
      if (!ev_out.empty()) {
        std::ofstream out(ev_out);
        out << json << '\n';
      }
      std::cout << json << std::endl;
      return 0;
    }

    if (*st) {
      const simgen::ScenarioTruth truth = io::read_truth(st_truth);
      const metrics::ContinuityStats stats = metrics::continuity_stats(truth);
      const std::string json = io::stats_json(stats);
      if (!st_out.empty()) {
        std::ofstream out(st_out);
        out << json << '\n';
      }
      std::cout << json << std::endl;
      return 0;
    }

    if (*ab) {
      EngineConfig base;
      if (!ab_config.empty()) base = io::read_engine_config(ab_config);
      const std::vector<Frame> frames = io::read_frames(ab_frames);
      check_stream_dim(frames, base.mcf.d);
      const simgen::ScenarioTruth truth =
          with_events(io::read_truth(ab_truth), ab_events);
      const ModelParams params = ab_ckpt.empty()
                                     ? ModelParams::reference(base.mcf.d)
                                     : io::load_checkpoint(ab_ckpt);

      const std::vector<std::string> names = {"full", "no_mcf", "no_mga", "no_tcp"};
      std::vector<metrics::EvalReport> reports;
      for (const std::string& name : names) {
        EngineConfig cfg = base;
        apply_ablation_flags(cfg, name == "no_tcp", name == "no_mga",
                             name == "no_mcf");
        reports.push_back(metrics::evaluate(run_tracker(frames, params, cfg), truth));
      }
      print_report_table(names, reports);
      std::string json = "{\"rows\":[";
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) json += ',';
        std::string row = io::report_json(reports[i]);
        row.insert(1, "\"name\":\"" + names[i] + "\",");
        json += row;
      }
      json += "]}";
      if (!ab_out.empty()) {
        std::ofstream out(ab_out);
        out << json << '\n';
      }
      std::cout << json << std::endl;
      return 0;
    }
  } catch (const std::exception& e) {
    return fail(e);
  }
  return 0;
}
