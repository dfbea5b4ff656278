#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "fusetrack/config.hpp"
#include "fusetrack/types.hpp"

namespace fusetrack::mcf {

/// Temperature scaling inputs for the adaptive softmax temperature.
struct TemperatureConfig {
  double delta = 0.5;
  double epsilon = 0.1;
};

/// Learnable weights of the fusion stage. Layouts are (out x in); biases are
/// stored as 1 x out row matrices so every parameter is a plain matrix.
struct McfParams {
  // Gating network: 3d -> h -> 2, rectifier between the affine layers. The
  // sigmoid lives in intra_confidence.
  Eigen::MatrixXd sgn_w1, sgn_b1, sgn_w2, sgn_b2;
  // Fusion network: 3d -> h -> d, rectifier between.
  Eigen::MatrixXd mfn_w1, mfn_b1, mfn_w2, mfn_b2;
  // Location projection: 4 -> d.
  Eigen::MatrixXd loc_w, loc_b;

  int dim() const { return static_cast<int>(loc_w.rows()); }
  void check() const;  // throws on shape inconsistency or non-finite entries
};

struct CueConfidences {
  double intra_loc = 1.0, intra_sem = 1.0;
  double inter_app = 1.0, inter_loc = 1.0, inter_sem = 1.0;
};

/// Per-frame cue matrices, one detection per row.
struct CueMatrices {
  Eigen::MatrixXd app, loc, sem;
  int rows() const { return static_cast<int>(app.rows()); }
};

/// alpha = ln((delta / (1 - delta)) * max(n, m)) / epsilon.
double adaptive_temperature(int n, int m, const TemperatureConfig& cfg);

Eigen::VectorXd loc_embedding(const Eigen::Vector4d& raw_loc, const McfParams& params);
Eigen::MatrixXd loc_embeddings(const std::vector<Detection>& dets, const McfParams& params);

/// Single-frame gate values (c_intra_loc, c_intra_sem), each in (0,1). The
/// bundle's loc vector must already be filled in.
std::pair<double, double> intra_confidence(const FeatureBundle& bundle,
                                           const McfParams& params);

/// Forward-backward cycle scores: with S_hat = rowsoftmax(alpha * E_t * E_prev^T),
/// returns diag(S_hat * S_hat^T), i.e. the squared norm of each softmax row.
/// Entries lie in [1/m, 1].
Eigen::VectorXd cycle_confidence(const Eigen::MatrixXd& e_t,
                                 const Eigen::MatrixXd& e_prev, double alpha);

/// Confidence-gated fusion through the fusion network.
Eigen::VectorXd fuse(const FeatureBundle& bundle, const CueConfidences& conf,
                     const McfParams& params);

/// c * e_app + (1 - c) * f_fus.
Eigen::VectorXd refine(const Eigen::VectorXd& f_fus, const Eigen::VectorXd& e_app,
                       double c_inter_app);

struct McfOutput {
  Eigen::MatrixXd m_cue;              // n x d fused features
  std::vector<CueConfidences> conf;   // per detection
  CueMatrices cues;                   // this frame's cue matrices, loc filled
};

/// Full per-frame pass: fills loc embeddings, computes intra and inter
/// confidences against the previous frame's cues, then fuses and refines.
/// Passing prev == nullptr (or empty) treats the frame as the first of its
/// sequence: every inter-frame confidence defaults to 1, which reduces the
/// refined feature to the appearance embedding.
McfOutput mcf_forward(const std::vector<Detection>& curr, const CueMatrices* prev,
                      const McfParams& params, const TemperatureConfig& cfg,
                      FusionMode mode = FusionMode::kAdaptive);

}  // namespace fusetrack::mcf
