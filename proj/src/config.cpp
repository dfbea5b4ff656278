#include "fusetrack/config.hpp"

#include <stdexcept>

namespace fusetrack {

namespace {
void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("config: " + message);
}
}  // namespace

void McfConfig::validate() const {
  require(d >= 2, "mcf.d must be >= 2");
  require(h >= 1, "mcf.h must be >= 1");
  require(delta > 0.0 && delta < 1.0, "mcf.delta must lie in (0,1)");
  require(epsilon > 0.0, "mcf.epsilon must be positive");
}

void MgaConfig::validate() const {
  require(tau_ioc > 0.0 && tau_ioc <= 1.0, "mga.tau_ioc must lie in (0,1]");
  require(tau_q >= 0.0 && tau_q <= 1.0, "mga.tau_q must lie in [0,1]");
  require(lambda >= 0.0, "mga.lambda must be >= 0");
}

void TcpConfig::validate() const {
  require(tau_low >= 0.0 && tau_low < tau_high && tau_high <= 1.0,
          "tcp thresholds must satisfy 0 <= tau_low < tau_high <= 1");
  require(beta >= 0.0, "tcp.beta must be >= 0");
  require(candidate_cap >= 1, "tcp.candidate_cap must be >= 1");
  require(nms_iou > 0.0 && nms_iou <= 1.0, "tcp.nms_iou must lie in (0,1]");
  for (std::size_t i = 1; i < tiers.size(); ++i) {
    require(tiers[i].min_mean_w < tiers[i - 1].min_mean_w ||
                tiers[i].min_count < tiers[i - 1].min_count,
            "tcp.tiers must be sorted strongest first");
  }
  for (const TcpTier& t : tiers) {
    require(t.eta >= 0.0 && t.eta <= 1.0, "tcp tier eta must lie in [0,1]");
    require(t.min_count >= 0, "tcp tier min_count must be >= 0");
  }
}

void TrackerConfig::validate() const {
  require(match_threshold > 0.0 && match_threshold < 1.0,
          "tracker.match_threshold must lie in (0,1)");
  require(memory_len >= 1, "tracker.memory_len must be >= 1");
  require(max_detections >= 1, "tracker.max_detections must be >= 1");
  require(max_misses >= 1, "tracker.max_misses must be >= 1");
  require(nms_iou > 0.0 && nms_iou <= 1.0, "tracker.nms_iou must lie in (0,1]");
}

void LearnConfig::validate() const {
  require(lr > 0.0, "learn.lr must be positive");
  require(epochs >= 0, "learn.epochs must be >= 0");
  require(beta1 >= 0.0 && beta1 < 1.0, "learn.beta1 must lie in [0,1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "learn.beta2 must lie in [0,1)");
  require(eps_stab > 0.0, "learn.eps_stab must be positive");
}

void EngineConfig::validate() const {
  mcf.validate();
  mga.validate();
  tcp.validate();
  tracker.validate();
  learn.validate();
}

std::string to_string(FusionMode m) {
  return m == FusionMode::kAdaptive ? "adaptive" : "sum";
}

std::string to_string(Assignment a) {
  return a == Assignment::kGreedy ? "greedy" : "optimal";
}

std::string to_string(Representative r) {
  return r == Representative::kMean ? "mean" : "max_sim";
}

}  // namespace fusetrack
