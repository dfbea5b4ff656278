#include "fusetrack/mga.hpp"

#include <cmath>
#include <stdexcept>

#include "fusetrack/numeric.hpp"

namespace fusetrack::mga {

void MgaParams::check() const {
  const int d = dim();
  if (w_q.cols() != d || w_k.rows() != d || w_k.cols() != d || w_v.rows() != d ||
      w_v.cols() != d) {
    throw std::invalid_argument("MgaParams: projections must be square d x d");
  }
  if (!w_q.allFinite() || !w_k.allFinite() || !w_v.allFinite()) {
    throw std::invalid_argument("MgaParams: non-finite parameter entry");
  }
}

std::vector<int> InclusionMask::children_of(int i) const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j) {
    if (mask(i, j) != 0) out.push_back(j);
  }
  return out;
}

InclusionMask build_inclusion_mask(const std::vector<BoundingBox>& boxes,
                                   double tau_ioc) {
  const int n = static_cast<int>(boxes.size());
  InclusionMask m;
  m.mask = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (ioc(boxes[i], boxes[j]) > tau_ioc) m.mask(i, j) = 1;
    }
  }
  return m;
}

TaqScores taq_scores(const Eigen::MatrixXd& f_t, const Eigen::MatrixXd& f_prev,
                     double alpha) {
  const int n = static_cast<int>(f_t.rows());
  TaqScores taq;
  if (f_prev.rows() == 0) {
    taq.q = Eigen::VectorXd::Ones(n);
    return taq;
  }
  const Eigen::MatrixXd fwd = softmax_rows(f_t * f_prev.transpose(), alpha);
  const Eigen::MatrixXd bwd = softmax_rows(f_prev * f_t.transpose(), alpha);
  taq.q = (fwd.array() * bwd.transpose().array()).rowwise().sum();
  return taq;
}

Eigen::MatrixXd aggregate(const Eigen::MatrixXd& f_m_cue, const InclusionMask& mask,
                          const TaqScores& taq, const MgaParams& params,
                          double tau_q, double lambda) {
  const int n = static_cast<int>(f_m_cue.rows());
  const int d = static_cast<int>(f_m_cue.cols());
  if (mask.size() != n || taq.q.size() != n) {
    throw std::invalid_argument("aggregate: mask/taq size mismatch");
  }
  Eigen::MatrixXd out = f_m_cue;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < n; ++i) {
    const std::vector<int> children = mask.children_of(i);
    if (children.empty()) continue;  // leaves keep their feature untouched

    Eigen::MatrixXd gated = Eigen::MatrixXd::Zero(static_cast<int>(children.size()), d);
    for (std::size_t k = 0; k < children.size(); ++k) {
      const int j = children[k];
      if (taq.q[j] > tau_q) gated.row(k) = f_m_cue.row(j);
    }
    const Eigen::RowVectorXd query = f_m_cue.row(i) * params.w_q.transpose();
    const Eigen::MatrixXd keys = gated * params.w_k.transpose();
    const Eigen::MatrixXd values = gated * params.w_v.transpose();
    const Eigen::MatrixXd scores = scale * (query * keys.transpose());
    const Eigen::MatrixXd attn = softmax_rows(scores, 1.0);
    out.row(i) = f_m_cue.row(i) + lambda * (attn * values);
  }
  return out;
}

}  // namespace fusetrack::mga
