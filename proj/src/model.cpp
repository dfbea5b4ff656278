#include "fusetrack/model.hpp"

#include <cmath>

#include "fusetrack/rng.hpp"

namespace fusetrack {

void ModelParams::check() const {
  mcf.check();
  mga.check();
  if (mga.dim() != mcf.dim()) {
    throw std::invalid_argument("ModelParams: mcf/mga dimension mismatch");
  }
}

namespace {

void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.uniform(-bound, bound);
    }
  }
}

// Weight (out x in) and bias (1 x out), bound 1/sqrt(in).
void init_affine(Eigen::MatrixXd& w, Eigen::MatrixXd& b, int out, int in, Rng& rng) {
  w.resize(out, in);
  b.resize(1, out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  fill_uniform(w, bound, rng);
  fill_uniform(b, bound, rng);
}

}  // namespace

ModelParams ModelParams::init(int d, int h, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xf05e));
  ModelParams p;
  init_affine(p.mcf.sgn_w1, p.mcf.sgn_b1, h, 3 * d, rng);
  init_affine(p.mcf.sgn_w2, p.mcf.sgn_b2, 2, h, rng);
  init_affine(p.mcf.mfn_w1, p.mcf.mfn_b1, h, 3 * d, rng);
  init_affine(p.mcf.mfn_w2, p.mcf.mfn_b2, d, h, rng);
  init_affine(p.mcf.loc_w, p.mcf.loc_b, d, 4, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  p.mga.w_q.resize(d, d);
  p.mga.w_k.resize(d, d);
  p.mga.w_v.resize(d, d);
  fill_uniform(p.mga.w_q, bound, rng);
  fill_uniform(p.mga.w_k, bound, rng);
  fill_uniform(p.mga.w_v, bound, rng);
  p.check();
  return p;
}

ModelParams ModelParams::reference(int d) {
  ModelParams p;
  const int h = 2 * d;
  p.mcf.sgn_w1 = Eigen::MatrixXd::Zero(h, 3 * d);
  p.mcf.sgn_b1 = Eigen::MatrixXd::Zero(1, h);
  p.mcf.sgn_w2 = Eigen::MatrixXd::Zero(2, h);
  p.mcf.sgn_b2 = Eigen::MatrixXd::Zero(1, 2);

  // a = [I | 0.5 I | 0.5 I]; the rectifier pair relu(a x) - relu(-a x)
  // reproduces a x for any sign, so the network output is exact.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, 3 * d);
  a.block(0, 0, d, d) = Eigen::MatrixXd::Identity(d, d);
  a.block(0, d, d, d) = 0.5 * Eigen::MatrixXd::Identity(d, d);
  a.block(0, 2 * d, d, d) = 0.5 * Eigen::MatrixXd::Identity(d, d);
  p.mcf.mfn_w1.resize(h, 3 * d);
  p.mcf.mfn_w1.topRows(d) = a;
  p.mcf.mfn_w1.bottomRows(d) = -a;
  p.mcf.mfn_b1 = Eigen::MatrixXd::Zero(1, h);
  p.mcf.mfn_w2.resize(d, h);
  p.mcf.mfn_w2.leftCols(d) = Eigen::MatrixXd::Identity(d, d);
  p.mcf.mfn_w2.rightCols(d) = -Eigen::MatrixXd::Identity(d, d);
  p.mcf.mfn_b2 = Eigen::MatrixXd::Zero(1, d);

  // Tiled normalized coordinates at a modest scale.
  p.mcf.loc_w = Eigen::MatrixXd::Zero(d, 4);
  for (int r = 0; r < d; ++r) p.mcf.loc_w(r, r % 4) = 0.5;
  p.mcf.loc_b = Eigen::MatrixXd::Zero(1, d);

  p.mga.w_q = Eigen::MatrixXd::Identity(d, d);
  p.mga.w_k = Eigen::MatrixXd::Identity(d, d);
  p.mga.w_v = Eigen::MatrixXd::Identity(d, d);
  p.check();
  return p;
}

std::vector<Eigen::MatrixXd*> tensor_list(ModelParams& p) {
  return {&p.mcf.sgn_w1, &p.mcf.sgn_b1, &p.mcf.sgn_w2, &p.mcf.sgn_b2,
          &p.mcf.mfn_w1, &p.mcf.mfn_b1, &p.mcf.mfn_w2, &p.mcf.mfn_b2,
          &p.mcf.loc_w,  &p.mcf.loc_b,  &p.mga.w_q,    &p.mga.w_k,
          &p.mga.w_v};
}

std::vector<const Eigen::MatrixXd*> tensor_list(const ModelParams& p) {
  return {&p.mcf.sgn_w1, &p.mcf.sgn_b1, &p.mcf.sgn_w2, &p.mcf.sgn_b2,
          &p.mcf.mfn_w1, &p.mcf.mfn_b1, &p.mcf.mfn_w2, &p.mcf.mfn_b2,
          &p.mcf.loc_w,  &p.mcf.loc_b,  &p.mga.w_q,    &p.mga.w_k,
          &p.mga.w_v};
}

std::vector<std::string> tensor_names() {
  return {"sgn.w1", "sgn.b1", "sgn.w2", "sgn.b2", "mfn.w1", "mfn.b1", "mfn.w2",
          "mfn.b2", "loc.w",  "loc.b",  "mga.wq", "mga.wk", "mga.wv"};
}

}  // namespace fusetrack
