#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fusetrack/geometry.hpp"

namespace fusetrack::mga {

/// Single-head cross-attention projections, each d x d.
struct MgaParams {
  Eigen::MatrixXd w_q, w_k, w_v;

  int dim() const { return static_cast<int>(w_q.rows()); }
  void check() const;
};

/// mask(i, j) == 1 iff detection j is a child of detection i, i.e. box j lies
/// inside box i beyond the IoC threshold. The diagonal is always zero.
struct InclusionMask {
  Eigen::MatrixXi mask;

  int size() const { return static_cast<int>(mask.rows()); }
  std::vector<int> children_of(int i) const;
};

/// Temporal association quality per detection, each in [0,1].
struct TaqScores {
  Eigen::VectorXd q;
};

InclusionMask build_inclusion_mask(const std::vector<BoundingBox>& boxes,
                                   double tau_ioc);

/// q = diag(rowsoftmax(alpha * F_t * F_prev^T) * rowsoftmax(alpha * F_prev * F_t^T)).
/// Note the second factor is the softmax of the reverse-direction similarity,
/// not the transpose of the first softmax. An empty previous frame yields
/// q = 1 for every detection.
TaqScores taq_scores(const Eigen::MatrixXd& f_t, const Eigen::MatrixXd& f_prev,
                     double alpha);

/// Quality-gated child-to-parent enhancement. Children with q <= tau_q have
/// their feature rows zeroed before the key/value projections; they stay in
/// the softmax denominator through their zeroed rows. Rows without children
/// pass through bit-identical.
Eigen::MatrixXd aggregate(const Eigen::MatrixXd& f_m_cue, const InclusionMask& mask,
                          const TaqScores& taq, const MgaParams& params,
                          double tau_q, double lambda);

}  // namespace fusetrack::mga
