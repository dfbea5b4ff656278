#pragma once

#include <Eigen/Dense>

namespace fusetrack {

/// Row-wise softmax of alpha * scores with max-subtraction for stability.
/// Every output row sums to 1. Shared by the inference path and the tape so
/// both compute bit-identical values.
inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores, double alpha) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const Eigen::RowVectorXd z = alpha * scores.row(i);
    const double zmax = z.maxCoeff();
    Eigen::RowVectorXd e = (z.array() - zmax).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

inline Eigen::MatrixXd relu(const Eigen::MatrixXd& x) {
  return x.array().max(0.0).matrix();
}

/// Cosine similarity with the zero-vector convention: any zero-norm operand
/// yields 0.
inline double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  double c = a.dot(b) / (na * nb);
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

}  // namespace fusetrack
