#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fusetrack/config.hpp"
#include "fusetrack/model.hpp"
#include "fusetrack/types.hpp"

namespace fusetrack::learn {

/// Two adjacent frames with ground-truth correspondence. y is n x m with
/// n = |curr| and m = |prev|; y(i, j) = 1 iff curr detection i and prev
/// detection j carry the same identity. Rows and columns hold at most one 1.
struct TrainingPair {
  std::vector<Detection> prev;
  std::vector<Detection> curr;
  Eigen::MatrixXd y;
};

/// Final-stage loss on given association features:
/// -sum_ij y_ij * log(rowsoftmax(F_t * F_prev^T)_ij + 1e-12).
double loss_from_features(const Eigen::MatrixXd& f_t, const Eigen::MatrixXd& f_prev,
                          const Eigen::MatrixXd& y);

/// Loss of the full differentiable pipeline (fusion + hierarchical
/// enhancement on both frames, then the association loss). The previous
/// frame is treated as the first of its sequence.
double association_loss(const TrainingPair& pair, const ModelParams& params,
                        const EngineConfig& cfg);

/// Exact reverse-mode gradients of association_loss for every parameter
/// tensor. Throws with the offending tensor's name when values go
/// non-finite.
ParamGrads gradients(const TrainingPair& pair, const ModelParams& params,
                     const EngineConfig& cfg, double* loss_out = nullptr);

/// Association features as the differentiable pipeline computes them;
/// lets tests pin the training path against the inference path.
struct PairFeatures {
  Eigen::MatrixXd f_asso_prev;
  Eigen::MatrixXd f_asso_curr;
  double loss = 0.0;
};
PairFeatures pair_forward_values(const TrainingPair& pair, const ModelParams& params,
                                 const EngineConfig& cfg);

/// Adaptive moment estimation state, one slot per parameter tensor.
struct OptimState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimState init(const ModelParams& params, const LearnConfig& cfg);
};

/// One bias-corrected update; zero gradients leave the parameters unchanged.
void optimizer_step(ModelParams& params, const ParamGrads& grads, OptimState& state);

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean loss per epoch
};

/// Seeded initialization, fixed pair order, one optimizer step per pair.
TrainResult train(const std::vector<TrainingPair>& pairs, const EngineConfig& cfg,
                  int epochs, std::uint64_t seed);

}  // namespace fusetrack::learn
