#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace fusetrack::ad {

/// Minimal reverse-mode tape over dense double matrices. Operations append
/// nodes in topological order, so walking the tape backwards is a valid
/// reverse sweep. Values follow the library convention of one detection per
/// row. Gradients accumulate into every node; leaves created with value()
/// are where parameters and inputs read their gradients after backward().
class Tape {
 public:
  struct Var {
    int i = -1;
    bool valid() const { return i >= 0; }
  };

  Var value(Eigen::MatrixXd v);

  const Eigen::MatrixXd& val(Var v) const { return nodes_[v.i].value; }
  const Eigen::MatrixXd& grad(Var v) const { return nodes_[v.i].grad; }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                      // elementwise
  Var scale(Var a, double k);
  Var affine(Var a, double k, double c);      // k * a + c elementwise
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var hcat3(Var a, Var b, Var c);             // column concat
  Var vcat(const std::vector<Var>& parts);    // row stack
  Var rows(Var a, std::vector<int> idx);      // gather rows
  Var relu(Var a);
  Var sigmoid(Var a);
  Var log_plus(Var a, double eps);            // log(a + eps)
  Var softmax_rows(Var a, double alpha);
  Var row_dot(Var a, Var b);                  // (a .* b) row sums -> n x 1
  Var scale_rows(Var a, Var w);               // row i times w(i, 0)
  Var scale_rows_const(Var a, Eigen::VectorXd w);
  Var add_rowvec(Var a, Var b);               // b is 1 x cols, broadcast
  Var sum(Var a);                             // 1 x 1

  /// Seeds the (1 x 1) root with gradient 1 and sweeps the tape in reverse.
  void backward(Var root);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  Var push(Eigen::MatrixXd v, std::function<void(Tape&)> back);
  Eigen::MatrixXd& g(Var v) { return nodes_[v.i].grad; }

  std::vector<Node> nodes_;
};

}  // namespace fusetrack::ad
