#include "fusetrack/tape.hpp"

#include <stdexcept>
#include <utility>

#include "fusetrack/numeric.hpp"

namespace fusetrack::ad {

using Mat = Eigen::MatrixXd;

Tape::Var Tape::push(Mat v, std::function<void(Tape&)> back) {
  Node node;
  node.grad = Mat::Zero(v.rows(), v.cols());
  node.value = std::move(v);
  node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Var Tape::value(Mat v) { return push(std::move(v), nullptr); }

Tape::Var Tape::add(Var a, Var b) {
  Var out = push(val(a) + val(b), nullptr);
  nodes_[out.i].back = [a, b, out](Tape& t) {
    t.g(a) += t.grad(out);
    t.g(b) += t.grad(out);
  };
  return out;
}

Tape::Var Tape::sub(Var a, Var b) {
  Var out = push(val(a) - val(b), nullptr);
  nodes_[out.i].back = [a, b, out](Tape& t) {
    t.g(a) += t.grad(out);
    t.g(b) -= t.grad(out);
  };
  return out;
}

Tape::Var Tape::mul(Var a, Var b) {
  Var out = push(val(a).cwiseProduct(val(b)), nullptr);
  nodes_[out.i].back = [a, b, out](Tape& t) {
    t.g(a) += t.grad(out).cwiseProduct(t.val(b));
    t.g(b) += t.grad(out).cwiseProduct(t.val(a));
  };
  return out;
}

Tape::Var Tape::scale(Var a, double k) {
  Var out = push(k * val(a), nullptr);
  nodes_[out.i].back = [a, k, out](Tape& t) { t.g(a) += k * t.grad(out); };
  return out;
}

Tape::Var Tape::affine(Var a, double k, double c) {
  Var out = push((k * val(a).array() + c).matrix(), nullptr);
  nodes_[out.i].back = [a, k, out](Tape& t) { t.g(a) += k * t.grad(out); };
  return out;
}

Tape::Var Tape::matmul(Var a, Var b) {
  Var out = push(val(a) * val(b), nullptr);
  nodes_[out.i].back = [a, b, out](Tape& t) {
    t.g(a) += t.grad(out) * t.val(b).transpose();
    t.g(b) += t.val(a).transpose() * t.grad(out);
  };
  return out;
}

Tape::Var Tape::transpose(Var a) {
  Var out = push(val(a).transpose(), nullptr);
  nodes_[out.i].back = [a, out](Tape& t) { t.g(a) += t.grad(out).transpose(); };
  return out;
}

Tape::Var Tape::hcat3(Var a, Var b, Var c) {
  // Widths must be read before push(): pushing can reallocate the node
  // storage and invalidate references returned by val().
  const Eigen::Index wa = val(a).cols(), wb = val(b).cols(), wc = val(c).cols();
  Mat v(val(a).rows(), wa + wb + wc);
  v << val(a), val(b), val(c);
  Var out = push(std::move(v), nullptr);
  nodes_[out.i].back = [a, b, c, wa, wb, wc, out](Tape& t) {
    const Mat& go = t.grad(out);
    t.g(a) += go.leftCols(wa);
    t.g(b) += go.middleCols(wa, wb);
    t.g(c) += go.rightCols(wc);
  };
  return out;
}

Tape::Var Tape::vcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("vcat: no parts");
  Eigen::Index rows = 0;
  for (Var p : parts) rows += val(p).rows();
  Mat v(rows, val(parts.front()).cols());
  Eigen::Index at = 0;
  std::vector<std::pair<Var, Eigen::Index>> offsets;
  offsets.reserve(parts.size());
  for (Var p : parts) {
    v.middleRows(at, val(p).rows()) = val(p);
    offsets.emplace_back(p, at);
    at += val(p).rows();
  }
  Var out = push(std::move(v), nullptr);
  nodes_[out.i].back = [offsets, out](Tape& t) {
    const Mat& go = t.grad(out);
    for (const auto& [p, off] : offsets) {
      t.g(p) += go.middleRows(off, t.val(p).rows());
    }
  };
  return out;
}

Tape::Var Tape::rows(Var a, std::vector<int> idx) {
  Mat v(static_cast<Eigen::Index>(idx.size()), val(a).cols());
  for (std::size_t k = 0; k < idx.size(); ++k) v.row(k) = val(a).row(idx[k]);
  Var out = push(std::move(v), nullptr);
  nodes_[out.i].back = [a, idx = std::move(idx), out](Tape& t) {
    const Mat& go = t.grad(out);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      t.g(a).row(idx[k]) += go.row(k);
    }
  };
  return out;
}

Tape::Var Tape::relu(Var a) {
  Var out = push(val(a).array().max(0.0).matrix(), nullptr);
  nodes_[out.i].back = [a, out](Tape& t) {
    t.g(a) += (t.val(a).array() > 0.0).cast<double>().matrix().cwiseProduct(t.grad(out));
  };
  return out;
}

Tape::Var Tape::sigmoid(Var a) {
  Var out = push(fusetrack::sigmoid(val(a)), nullptr);
  nodes_[out.i].back = [a, out](Tape& t) {
    const Mat& s = t.val(out);
    t.g(a) += t.grad(out).cwiseProduct(
        s.cwiseProduct((1.0 - s.array()).matrix()));
  };
  return out;
}

Tape::Var Tape::log_plus(Var a, double eps) {
  Var out = push((val(a).array() + eps).log().matrix(), nullptr);
  nodes_[out.i].back = [a, eps, out](Tape& t) {
    t.g(a) += t.grad(out).cwiseQuotient((t.val(a).array() + eps).matrix());
  };
  return out;
}

Tape::Var Tape::softmax_rows(Var a, double alpha) {
  Var out = push(fusetrack::softmax_rows(val(a), alpha), nullptr);
  // d softmax(alpha x) = alpha * (diag(s) - s s^T) applied per row.
  nodes_[out.i].back = [a, alpha, out](Tape& t) {
    const Mat& s = t.val(out);
    const Mat& go = t.grad(out);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double dot = go.row(i).dot(s.row(i));
      t.g(a).row(i) +=
          alpha * (go.row(i).cwiseProduct(s.row(i)) - dot * s.row(i));
    }
  };
  return out;
}

Tape::Var Tape::row_dot(Var a, Var b) {
  Mat v = val(a).cwiseProduct(val(b)).rowwise().sum();
  Var out = push(std::move(v), nullptr);
  nodes_[out.i].back = [a, b, out](Tape& t) {
    const Mat& go = t.grad(out);
    for (Eigen::Index i = 0; i < go.rows(); ++i) {
      t.g(a).row(i) += go(i, 0) * t.val(b).row(i);
      t.g(b).row(i) += go(i, 0) * t.val(a).row(i);
    }
  };
  return out;
}

Tape::Var Tape::scale_rows(Var a, Var w) {
  if (val(w).cols() != 1 || val(w).rows() != val(a).rows()) {
    throw std::invalid_argument("scale_rows: w must be (rows(a) x 1)");
  }
  Mat v = val(a).array().colwise() * val(w).col(0).array();
  Var out = push(std::move(v), nullptr);
  nodes_[out.i].back = [a, w, out](Tape& t) {
    const Mat& go = t.grad(out);
    t.g(a) += (go.array().colwise() * t.val(w).col(0).array()).matrix();
    for (Eigen::Index i = 0; i < go.rows(); ++i) {
      t.g(w)(i, 0) += go.row(i).dot(t.val(a).row(i));
    }
  };
  return out;
}

Tape::Var Tape::scale_rows_const(Var a, Eigen::VectorXd w) {
  Mat v = val(a).array().colwise() * w.array();
  Var out = push(std::move(v), nullptr);
  nodes_[out.i].back = [a, w = std::move(w), out](Tape& t) {
    t.g(a) += (t.grad(out).array().colwise() * w.array()).matrix();
  };
  return out;
}

Tape::Var Tape::add_rowvec(Var a, Var b) {
  if (val(b).rows() != 1 || val(b).cols() != val(a).cols()) {
    throw std::invalid_argument("add_rowvec: b must be (1 x cols(a))");
  }
  Mat v = val(a).rowwise() + val(b).row(0);
  Var out = push(std::move(v), nullptr);
  nodes_[out.i].back = [a, b, out](Tape& t) {
    t.g(a) += t.grad(out);
    t.g(b).row(0) += t.grad(out).colwise().sum();
  };
  return out;
}

Tape::Var Tape::sum(Var a) {
  Mat v(1, 1);
  v(0, 0) = val(a).sum();
  Var out = push(std::move(v), nullptr);
  nodes_[out.i].back = [a, out](Tape& t) {
    t.g(a).array() += t.grad(out)(0, 0);
  };
  return out;
}

void Tape::backward(Var root) {
  if (val(root).rows() != 1 || val(root).cols() != 1) {
    throw std::invalid_argument("backward: root must be scalar");
  }
  g(root)(0, 0) = 1.0;
  for (int i = root.i; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
}

}  // namespace fusetrack::ad
