#pragma once

#include <cstdint>
#include <vector>

#include "fusetrack/learn.hpp"
#include "fusetrack/types.hpp"

namespace fusetrack::simgen {

/// Synthetic world: objects on piecewise-linear bouncing trajectories with
/// per-identity appearance latents and per-category semantic latents, plus
/// injected detector pathologies (score flicker, occlusion, clutter).
struct ScenarioConfig {
  std::uint64_t seed = 1;
  int image_w = 640;
  int image_h = 480;
  int num_frames = 200;
  int num_objects = 10;

  // Category pool; the last ceil(novel_fraction * num_categories) categories
  // count as novel and use sem_noise_novel.
  int num_categories = 5;
  double novel_fraction = 0.4;

  // Motion model.
  double min_speed = 1.0;
  double max_speed = 3.0;
  double turn_prob = 0.05;  // per-frame direction resample
  double min_obj_size = 40.0;
  double max_obj_size = 80.0;

  // Embedding model. Latents live on the unit sphere; emitted embeddings are
  // scaled by embed_scale so that feature dot products have enough dynamic
  // range for confident softmax matching, as trained embeddings do.
  int embed_dim = 16;
  double embed_scale = 4.0;
  double app_noise = 0.05;
  double sem_noise = 0.02;
  double sem_noise_novel = 0.02;
  // Appearance latent = normalize(class anchor + spread * unit vector); small
  // values make same-category objects look alike.
  double app_within_class_spread = 1.0;

  // Detection scores for visible objects.
  double score_lo = 0.75;
  double score_hi = 0.98;

  // Flicker: the detection keeps its box and features but its score drops
  // into [flicker_lo, flicker_hi]. Empty frame/identity filters mean "any".
  double flicker_prob = 0.0;
  double flicker_lo = 0.05;
  double flicker_hi = 0.5;
  std::vector<std::int64_t> flicker_frames;
  std::vector<int> flicker_identities;

  // Occlusion: parents with children lose only their own detection (partial);
  // childless objects disappear entirely. On reappearance the appearance
  // latent drifts by occlusion_drift.
  double occlusion_prob = 0.0;
  int occlusion_min_len = 2;
  int occlusion_max_len = 4;
  double occlusion_drift = 0.0;

  // Children: fully contained co-moving boxes with their own identities.
  double child_spawn_prob = 0.0;
  int children_per_parent = 2;
  bool child_same_class = false;

  // Expected false positives per frame (Poisson).
  double clutter_rate = 0.0;

  void validate() const;
};

struct TruthRecord {
  int identity = -1;
  BoundingBox box;
  int class_id = 0;
  double score = 0.0;
  Eigen::VectorXd app;
  Eigen::VectorXd sem;
  bool visible = true;
};

struct FlickerEvent {
  std::int64_t frame = 0;
  int identity = -1;
};

struct OcclusionEvent {
  std::int64_t frame_start = 0;
  std::int64_t frame_end = 0;  // inclusive
  int identity = -1;
  bool partial = false;
};

struct ScenarioTruth {
  int image_w = 0;
  int image_h = 0;
  std::vector<std::int64_t> frame_ids;
  std::vector<std::vector<TruthRecord>> records;  // parallel to frame_ids
  std::vector<FlickerEvent> flickers;
  std::vector<OcclusionEvent> occlusions;
};

struct Scenario {
  std::vector<Frame> frames;
  ScenarioTruth truth;
};

/// Deterministic in the seed: two calls with equal configs produce
/// bit-identical frames and truth.
Scenario generate(const ScenarioConfig& cfg);

/// Builds one pair per consecutive frame pair where both sides have
/// detections. Labels come from identity equality; clutter rows and columns
/// stay all-zero.
std::vector<learn::TrainingPair> to_training_pairs(const std::vector<Frame>& frames,
                                                   const ScenarioTruth& truth);

}  // namespace fusetrack::simgen
