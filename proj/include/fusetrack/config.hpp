#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fusetrack {

enum class FusionMode { kAdaptive, kSum };
enum class Assignment { kGreedy, kOptimal };
enum class Representative { kMean, kMaxSim };

struct McfConfig {
  int d = 256;
  int h = 256;
  double delta = 0.5;
  double epsilon = 0.1;
  FusionMode fusion = FusionMode::kAdaptive;

  void validate() const;
};

struct MgaConfig {
  double tau_ioc = 0.8;
  double tau_q = 0.3;
  double lambda = 0.1;

  void validate() const;
};

struct TcpTier {
  double min_mean_w = 0.0;  // tier matches when mean_w strictly exceeds this
  int min_count = 0;        // and the same-class source count reaches this
  double eta = 0.0;
};

struct TcpConfig {
  double tau_high = 0.5;
  double tau_low = 0.05;
  double beta = 0.3;
  int candidate_cap = 50;
  double nms_iou = 0.5;
  // Strongest tier first; first match wins. An empty source set always gets
  // eta = 0 regardless of tiers.
  std::vector<TcpTier> tiers = {{0.8, 4, 0.7}, {0.6, 3, 0.5}, {0.5, 2, 0.3}};

  void validate() const;
};

struct TrackerConfig {
  double match_threshold = 0.35;
  int memory_len = 30;
  int max_detections = 80;
  int max_misses = 30;
  double nms_iou = 0.5;
  Assignment assignment = Assignment::kGreedy;
  Representative representative = Representative::kMean;

  void validate() const;
};

struct LearnConfig {
  double lr = 1e-3;
  int epochs = 10;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stab = 1e-8;

  void validate() const;
};

struct EngineConfig {
  McfConfig mcf;
  MgaConfig mga;
  TcpConfig tcp;
  TrackerConfig tracker;
  LearnConfig learn;

  void validate() const;
};

std::string to_string(FusionMode m);
std::string to_string(Assignment a);
std::string to_string(Representative r);

}  // namespace fusetrack
