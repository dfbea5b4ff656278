#include <cmath>

#include "doctest.h"
#include "fusetrack/mga.hpp"
#include "fusetrack/model.hpp"
#include "fusetrack/rng.hpp"
#include "oracles.hpp"

using namespace fusetrack;

namespace {

Eigen::MatrixXd random_features(Rng& rng, int n, int d) {
  Eigen::MatrixXd f(n, d);
  for (int i = 0; i < n; ++i) f.row(i) = rng.gaussian_vector(d, 1.0).transpose();
  return f;
}

// Test-local recomputation of the gated attention for one parent.
Eigen::RowVectorXd attention_oracle(const Eigen::MatrixXd& f, int parent,
                                    const std::vector<int>& children,
                                    const Eigen::VectorXd& q, const mga::MgaParams& p,
                                    double tau_q, double lambda) {
  const int d = static_cast<int>(f.cols());
  Eigen::MatrixXd gated = Eigen::MatrixXd::Zero(children.size(), d);
  for (std::size_t k = 0; k < children.size(); ++k) {
    if (q[children[k]] > tau_q) gated.row(k) = f.row(children[k]);
  }
  const Eigen::RowVectorXd query = f.row(parent) * p.w_q.transpose();
  const Eigen::MatrixXd keys = gated * p.w_k.transpose();
  const Eigen::MatrixXd values = gated * p.w_v.transpose();
  Eigen::RowVectorXd scores = (query * keys.transpose()) / std::sqrt(double(d));
  const Eigen::MatrixXd attn = oracles::softmax_rows(scores, 1.0);
  return f.row(parent) + lambda * (attn * values);
}

}  // namespace

TEST_SUITE("mga") {

TEST_CASE("inclusion mask of disjoint boxes is empty") {
  const std::vector<BoundingBox> boxes = {{0, 0, 10, 10}, {20, 0, 30, 10}, {40, 0, 50, 10}};
  const mga::InclusionMask m = mga::build_inclusion_mask(boxes, 0.8);
  CHECK(m.mask.sum() == 0);
}

TEST_CASE("inclusion mask containment is asymmetric") {
  const std::vector<BoundingBox> boxes = {{0, 0, 100, 100}, {10, 10, 30, 30}};
  const mga::InclusionMask m = mga::build_inclusion_mask(boxes, 0.8);
  CHECK(m.mask(0, 1) == 1);  // small box inside the big one
  CHECK(m.mask(1, 0) == 0);
  CHECK(m.mask(0, 0) == 0);
  CHECK(m.children_of(0) == std::vector<int>{1});
}

TEST_CASE("identical boxes are mutual parents") {
  const std::vector<BoundingBox> boxes = {{0, 0, 10, 10}, {0, 0, 10, 10}};
  const mga::InclusionMask m = mga::build_inclusion_mask(boxes, 0.8);
  CHECK(m.mask(0, 1) == 1);
  CHECK(m.mask(1, 0) == 1);
}

TEST_CASE("taq degenerate and identity cases") {
  Rng rng(3);
  const Eigen::MatrixXd single = random_features(rng, 1, 4);
  CHECK(mga::taq_scores(single, single, 5.0).q[0] == 1.0);

  const double alpha = std::log(2.0) / 0.1;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const mga::TaqScores taq = mga::taq_scores(eye, eye, alpha);
  const double p = 1.0 / (1.0 + std::exp(-alpha));
  const double expected = p * p + (1.0 - p) * (1.0 - p);
  CHECK(taq.q[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(taq.q[1] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("taq with alpha 0 equals 1/n for any m") {
  Rng rng(5);
  for (const auto [n, m] : {std::pair{3, 3}, std::pair{4, 7}, std::pair{6, 2}}) {
    const Eigen::MatrixXd f_t = random_features(rng, n, 5);
    const Eigen::MatrixXd f_prev = random_features(rng, m, 5);
    const mga::TaqScores taq = mga::taq_scores(f_t, f_prev, 0.0);
    // Forward rows are uniform 1/m; backward entries are 1/n; the product
    // diagonal sums m * (1/m) * (1/n).
    for (int i = 0; i < n; ++i) CHECK(taq.q[i] == doctest::Approx(1.0 / n).epsilon(1e-12));
  }
}

TEST_CASE("taq uses the reverse softmax, not the transpose") {
  Rng rng(6);
  const int n = 3, m = 4, d = 5;
  const Eigen::MatrixXd f_t = random_features(rng, n, d);
  const Eigen::MatrixXd f_prev = random_features(rng, m, d);
  const double alpha = 4.0;
  const mga::TaqScores taq = mga::taq_scores(f_t, f_prev, alpha);
  const Eigen::MatrixXd fwd = oracles::softmax_rows(f_t * f_prev.transpose(), alpha);
  const Eigen::MatrixXd bwd = oracles::softmax_rows(f_prev * f_t.transpose(), alpha);
  for (int i = 0; i < n; ++i) {
    double q = 0.0;
    for (int k = 0; k < m; ++k) q += fwd(i, k) * bwd(k, i);
    CHECK(taq.q[i] == doctest::Approx(q).epsilon(1e-12));
    CHECK(taq.q[i] >= 0.0);
    CHECK(taq.q[i] <= 1.0 + 1e-12);
  }
}

TEST_CASE("aggregate leaves rows without children untouched") {
  Rng rng(7);
  const int d = 6;
  const ModelParams p = ModelParams::init(d, d, 9);
  const std::vector<BoundingBox> boxes = {{0, 0, 10, 10}, {20, 0, 30, 10}};
  const Eigen::MatrixXd f = random_features(rng, 2, d);
  mga::TaqScores taq;
  taq.q = Eigen::VectorXd::Ones(2);
  const Eigen::MatrixXd out = mga::aggregate(
      f, mga::build_inclusion_mask(boxes, 0.8), taq, p.mga, 0.3, 0.1);
  CHECK(out == f);  // bit-identical
}

TEST_CASE("aggregate with all children gated out is the identity") {
  Rng rng(8);
  const int d = 6;
  const ModelParams p = ModelParams::init(d, d, 10);
  const std::vector<BoundingBox> boxes = {{0, 0, 100, 100}, {10, 10, 30, 30}, {50, 50, 80, 80}};
  const Eigen::MatrixXd f = random_features(rng, 3, d);
  mga::TaqScores taq;
  taq.q = Eigen::VectorXd::Constant(3, 0.1);  // below tau_q
  const Eigen::MatrixXd out = mga::aggregate(
      f, mga::build_inclusion_mask(boxes, 0.8), taq, p.mga, 0.3, 0.1);
  CHECK((out - f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single reliable child with identity projections") {
  Rng rng(9);
  const int d = 6;
  const ModelParams p = ModelParams::reference(d);  // identity W_q/W_k/W_v
  const std::vector<BoundingBox> boxes = {{0, 0, 100, 100}, {10, 10, 40, 40}};
  const Eigen::MatrixXd f = random_features(rng, 2, d);
  mga::TaqScores taq;
  taq.q = Eigen::VectorXd::Ones(2);
  const double lambda = 0.1;
  const Eigen::MatrixXd out = mga::aggregate(
      f, mga::build_inclusion_mask(boxes, 0.8), taq, p.mga, 0.3, lambda);
  // Softmax over one child is 1, so the parent gains lambda * f_child.
  CHECK((out.row(0) - (f.row(0) + lambda * f.row(1))).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(out.row(1) == f.row(1));
}

TEST_CASE("lambda 0 reduces aggregate to the identity") {
  Rng rng(10);
  const int d = 5;
  const ModelParams p = ModelParams::init(d, d, 11);
  const std::vector<BoundingBox> boxes = {{0, 0, 100, 100}, {5, 5, 50, 50}, {40, 40, 90, 90}};
  const Eigen::MatrixXd f = random_features(rng, 3, d);
  mga::TaqScores taq;
  taq.q = Eigen::VectorXd::Ones(3);
  const Eigen::MatrixXd out = mga::aggregate(
      f, mga::build_inclusion_mask(boxes, 0.8), taq, p.mga, 0.3, 0.0);
  CHECK((out - f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("aggregate matches the per-parent oracle on random scenes") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = rng.uniform_int(3, 8);
    const int n = rng.uniform_int(2, 7);
    const ModelParams p = ModelParams::init(d, d, 100 + trial);
    std::vector<BoundingBox> boxes;
    for (int i = 0; i < n; ++i) {
      const double x = rng.uniform(0.0, 200.0), y = rng.uniform(0.0, 200.0);
      const double w = rng.uniform(10.0, 120.0), h = rng.uniform(10.0, 120.0);
      boxes.emplace_back(x, y, x + w, y + h);
    }
    const Eigen::MatrixXd f = random_features(rng, n, d);
    mga::TaqScores taq;
    taq.q.resize(n);
    for (int i = 0; i < n; ++i) taq.q[i] = rng.uniform();
    const double tau_q = 0.3, lambda = 0.1;
    const mga::InclusionMask mask = mga::build_inclusion_mask(boxes, 0.6);
    const Eigen::MatrixXd out = mga::aggregate(f, mask, taq, p.mga, tau_q, lambda);
    for (int i = 0; i < n; ++i) {
      const std::vector<int> children = mask.children_of(i);
      if (children.empty()) {
        CHECK(out.row(i) == f.row(i));
      } else {
        const Eigen::RowVectorXd expected =
            attention_oracle(f, i, children, taq.q, p.mga, tau_q, lambda);
        CHECK((out.row(i) - expected).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("equal reliable children act as a convex unit") {
  Rng rng(13);
  const int d = 6;
  const ModelParams p = ModelParams::reference(d);
  const std::vector<BoundingBox> boxes = {
      {0, 0, 100, 100}, {5, 5, 30, 30}, {60, 60, 90, 90}};
  Eigen::MatrixXd f = random_features(rng, 3, d);
  f.row(2) = f.row(1);  // identical child features
  mga::TaqScores taq;
  taq.q = Eigen::VectorXd::Ones(3);
  const Eigen::MatrixXd out = mga::aggregate(
      f, mga::build_inclusion_mask(boxes, 0.8), taq, p.mga, 0.3, 0.1);
  // Attention weights sum to 1, so the mix of equal values is that value.
  CHECK((out.row(0) - (f.row(0) + 0.1 * f.row(1))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("raising tau_q only shrinks the reliable child set") {
  Rng rng(14);
  const int n = 6;
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = rng.uniform();
  for (double lo : {0.1, 0.4}) {
    const double hi = lo + 0.3;
    for (int i = 0; i < n; ++i) {
      if (q[i] > hi) CHECK(q[i] > lo);  // gate at hi implies gate at lo
    }
  }
}

TEST_CASE("isolated detections only affect their own row") {
  Rng rng(15);
  const int d = 5;
  const ModelParams p = ModelParams::init(d, d, 16);
  // 0 is a parent of 1; 2 is isolated.
  const std::vector<BoundingBox> boxes = {{0, 0, 100, 100}, {10, 10, 40, 40}, {150, 150, 200, 200}};
  Eigen::MatrixXd f = random_features(rng, 3, d);
  mga::TaqScores taq;
  taq.q = Eigen::VectorXd::Ones(3);
  const mga::InclusionMask mask = mga::build_inclusion_mask(boxes, 0.8);
  const Eigen::MatrixXd base = mga::aggregate(f, mask, taq, p.mga, 0.3, 0.1);
  Eigen::MatrixXd f2 = f;
  f2.row(2) += rng.gaussian_vector(d, 1.0).transpose();
  const Eigen::MatrixXd perturbed = mga::aggregate(f2, mask, taq, p.mga, 0.3, 0.1);
  CHECK(base.row(0) == perturbed.row(0));
  CHECK(base.row(1) == perturbed.row(1));
  CHECK(base.row(2) != perturbed.row(2));
}

}  // TEST_SUITE
