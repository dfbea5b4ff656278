#include "fusetrack/mcf.hpp"

#include <cmath>
#include <stdexcept>

#include "fusetrack/numeric.hpp"

namespace fusetrack::mcf {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

// y = x * W^T + b for a single row vector x.
Eigen::RowVectorXd affine(const Eigen::RowVectorXd& x, const Eigen::MatrixXd& w,
                          const Eigen::MatrixXd& b) {
  return x * w.transpose() + b.row(0);
}

}  // namespace

void McfParams::check() const {
  const int d = dim();
  const int h = static_cast<int>(sgn_w1.rows());
  require(d >= 2, "McfParams: feature dimension must be >= 2");
  require(sgn_w1.cols() == 3 * d && sgn_b1.cols() == h && sgn_b1.rows() == 1,
          "McfParams: sgn first layer shape mismatch");
  require(sgn_w2.rows() == 2 && sgn_w2.cols() == h && sgn_b2.cols() == 2,
          "McfParams: sgn second layer shape mismatch");
  const int hm = static_cast<int>(mfn_w1.rows());
  require(mfn_w1.cols() == 3 * d && mfn_b1.cols() == hm,
          "McfParams: mfn first layer shape mismatch");
  require(mfn_w2.rows() == d && mfn_w2.cols() == hm && mfn_b2.cols() == d,
          "McfParams: mfn second layer shape mismatch");
  require(loc_w.cols() == 4 && loc_b.cols() == d,
          "McfParams: location projection shape mismatch");
  for (const Eigen::MatrixXd* m :
       {&sgn_w1, &sgn_b1, &sgn_w2, &sgn_b2, &mfn_w1, &mfn_b1, &mfn_w2, &mfn_b2,
        &loc_w, &loc_b}) {
    require(m->allFinite(), "McfParams: non-finite parameter entry");
  }
}

double adaptive_temperature(int n, int m, const TemperatureConfig& cfg) {
  require(n >= 1 && m >= 1, "adaptive_temperature: n and m must be >= 1");
  const int largest = n > m ? n : m;
  return std::log(cfg.delta / (1.0 - cfg.delta) * static_cast<double>(largest)) /
         cfg.epsilon;
}

Eigen::VectorXd loc_embedding(const Eigen::Vector4d& raw_loc, const McfParams& params) {
  return (raw_loc.transpose() * params.loc_w.transpose() + params.loc_b.row(0))
      .transpose();
}

Eigen::MatrixXd loc_embeddings(const std::vector<Detection>& dets,
                               const McfParams& params) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(dets.size()), params.dim());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    out.row(i) = loc_embedding(dets[i].raw_loc, params).transpose();
  }
  return out;
}

std::pair<double, double> intra_confidence(const FeatureBundle& bundle,
                                           const McfParams& params) {
  const int d = params.dim();
  require(bundle.app.size() == d && bundle.loc.size() == d && bundle.sem.size() == d,
          "intra_confidence: bundle dimension mismatch");
  Eigen::RowVectorXd x(3 * d);
  x << bundle.app.transpose(), bundle.loc.transpose(), bundle.sem.transpose();
  const Eigen::RowVectorXd hidden =
      affine(x, params.sgn_w1, params.sgn_b1).array().max(0.0);
  const Eigen::RowVectorXd gates = affine(hidden, params.sgn_w2, params.sgn_b2);
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  return {sig(gates[0]), sig(gates[1])};
}

Eigen::VectorXd cycle_confidence(const Eigen::MatrixXd& e_t,
                                 const Eigen::MatrixXd& e_prev, double alpha) {
  require(e_t.rows() >= 1 && e_prev.rows() >= 1,
          "cycle_confidence: both frames need at least one detection");
  require(e_t.cols() == e_prev.cols(), "cycle_confidence: dimension mismatch");
  const Eigen::MatrixXd s_hat = softmax_rows(e_t * e_prev.transpose(), alpha);
  return s_hat.array().square().rowwise().sum();
}

Eigen::VectorXd fuse(const FeatureBundle& bundle, const CueConfidences& conf,
                     const McfParams& params) {
  const int d = params.dim();
  require(bundle.app.size() == d && bundle.loc.size() == d && bundle.sem.size() == d,
          "fuse: bundle dimension mismatch");
  const Eigen::VectorXd loc_t = conf.intra_loc * conf.inter_loc * bundle.loc;
  const Eigen::VectorXd sem_t = conf.intra_sem * conf.inter_sem * bundle.sem;
  Eigen::RowVectorXd x(3 * d);
  x << bundle.app.transpose(), loc_t.transpose(), sem_t.transpose();
  const Eigen::RowVectorXd hidden =
      affine(x, params.mfn_w1, params.mfn_b1).array().max(0.0);
  return affine(hidden, params.mfn_w2, params.mfn_b2).transpose();
}

Eigen::VectorXd refine(const Eigen::VectorXd& f_fus, const Eigen::VectorXd& e_app,
                       double c_inter_app) {
  return c_inter_app * e_app + (1.0 - c_inter_app) * f_fus;
}

McfOutput mcf_forward(const std::vector<Detection>& curr, const CueMatrices* prev,
                      const McfParams& params, const TemperatureConfig& cfg,
                      FusionMode mode) {
  const int n = static_cast<int>(curr.size());
  const int d = params.dim();

  McfOutput out;
  out.cues.app.resize(n, d);
  out.cues.sem.resize(n, d);
  for (int i = 0; i < n; ++i) {
    require(curr[i].features.app.size() == d && curr[i].features.sem.size() == d,
            "mcf_forward: detection embedding dimension mismatch");
    out.cues.app.row(i) = curr[i].features.app.transpose();
    out.cues.sem.row(i) = curr[i].features.sem.transpose();
  }
  out.cues.loc = loc_embeddings(curr, params);
  out.m_cue.resize(n, d);
  out.conf.resize(n);
  if (n == 0) return out;

  const bool has_prev = prev != nullptr && prev->rows() > 0;
  Eigen::VectorXd inter_app, inter_loc, inter_sem;
  if (has_prev) {
    const double alpha = adaptive_temperature(n, prev->rows(), cfg);
    inter_app = cycle_confidence(out.cues.app, prev->app, alpha);
    inter_loc = cycle_confidence(out.cues.loc, prev->loc, alpha);
    inter_sem = cycle_confidence(out.cues.sem, prev->sem, alpha);
  } else {
    // First frame of a sequence: no temporal evidence, so every inter-frame
    // confidence is the neutral 1.
    inter_app = inter_loc = inter_sem = Eigen::VectorXd::Ones(n);
  }

  for (int i = 0; i < n; ++i) {
    FeatureBundle bundle = curr[i].features;
    bundle.loc = out.cues.loc.row(i).transpose();

    if (mode == FusionMode::kSum) {
      out.conf[i] = CueConfidences{};  // reported as the forced value 1
      out.m_cue.row(i) = (bundle.app + bundle.loc + bundle.sem).transpose();
      continue;
    }

    CueConfidences& c = out.conf[i];
    std::tie(c.intra_loc, c.intra_sem) = intra_confidence(bundle, params);
    c.inter_app = inter_app[i];
    c.inter_loc = inter_loc[i];
    c.inter_sem = inter_sem[i];
    const Eigen::VectorXd f_fus = fuse(bundle, c, params);
    out.m_cue.row(i) = refine(f_fus, bundle.app, c.inter_app).transpose();
  }
  return out;
}

}  // namespace fusetrack::mcf
