#include "fusetrack/learn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fusetrack/mcf.hpp"
#include "fusetrack/mga.hpp"
#include "fusetrack/numeric.hpp"
#include "fusetrack/tape.hpp"

namespace fusetrack::learn {

namespace {

using ad::Tape;
using Var = ad::Tape::Var;

struct ModelVars {
  Var sgn_w1, sgn_b1, sgn_w2, sgn_b2;
  Var mfn_w1, mfn_b1, mfn_w2, mfn_b2;
  Var loc_w, loc_b;
  Var w_q, w_k, w_v;
};

ModelVars bind(Tape& t, const ModelParams& p) {
  ModelVars v;
  v.sgn_w1 = t.value(p.mcf.sgn_w1);
  v.sgn_b1 = t.value(p.mcf.sgn_b1);
  v.sgn_w2 = t.value(p.mcf.sgn_w2);
  v.sgn_b2 = t.value(p.mcf.sgn_b2);
  v.mfn_w1 = t.value(p.mcf.mfn_w1);
  v.mfn_b1 = t.value(p.mcf.mfn_b1);
  v.mfn_w2 = t.value(p.mcf.mfn_w2);
  v.mfn_b2 = t.value(p.mcf.mfn_b2);
  v.loc_w = t.value(p.mcf.loc_w);
  v.loc_b = t.value(p.mcf.loc_b);
  v.w_q = t.value(p.mga.w_q);
  v.w_k = t.value(p.mga.w_k);
  v.w_v = t.value(p.mga.w_v);
  return v;
}

std::vector<Var> var_list(const ModelVars& v) {
  return {v.sgn_w1, v.sgn_b1, v.sgn_w2, v.sgn_b2, v.mfn_w1, v.mfn_b1, v.mfn_w2,
          v.mfn_b2, v.loc_w,  v.loc_b,  v.w_q,    v.w_k,    v.w_v};
}

struct FrameVars {
  Var app, loc, sem;  // cue matrices
  Var m_cue;
  Var f_asso;
  std::vector<BoundingBox> boxes;
};

Var linear(Tape& t, Var x, Var w, Var b) {
  return t.add_rowvec(t.matmul(x, t.transpose(w)), b);
}

// Differentiable twin of the inference pipeline for one frame. The previous
// frame, when present, supplies the cycle-consistency context. The quality
// gate in the enhancement stage is treated as a per-step constant.
FrameVars frame_features(Tape& t, const ModelVars& mv,
                         const std::vector<Detection>& dets, const FrameVars* prev,
                         const ModelParams& params, const EngineConfig& cfg) {
  const int n = static_cast<int>(dets.size());
  const int d = params.dim();

  FrameVars fv;
  Eigen::MatrixXd app(n, d), sem(n, d), raw(n, 4);
  for (int i = 0; i < n; ++i) {
    app.row(i) = dets[i].features.app.transpose();
    sem.row(i) = dets[i].features.sem.transpose();
    raw.row(i) = dets[i].raw_loc.transpose();
    fv.boxes.push_back(dets[i].box);
  }
  fv.app = t.value(std::move(app));
  fv.sem = t.value(std::move(sem));
  Var raw_v = t.value(std::move(raw));
  fv.loc = linear(t, raw_v, mv.loc_w, mv.loc_b);

  if (cfg.mcf.fusion == FusionMode::kSum) {
    fv.m_cue = t.add(t.add(fv.app, fv.loc), fv.sem);
  } else {
    // Intra-frame gates.
    Var x = t.hcat3(fv.app, fv.loc, fv.sem);
    Var gates = t.sigmoid(
        linear(t, t.relu(linear(t, x, mv.sgn_w1, mv.sgn_b1)), mv.sgn_w2, mv.sgn_b2));
    Eigen::MatrixXd sel0(2, 1), sel1(2, 1);
    sel0 << 1, 0;
    sel1 << 0, 1;
    Var c_intra_loc = t.matmul(gates, t.value(sel0));
    Var c_intra_sem = t.matmul(gates, t.value(sel1));

    // Inter-frame cycle consistency per cue.
    Var c_inter_app, c_inter_loc, c_inter_sem;
    if (prev != nullptr) {
      const int m = static_cast<int>(t.val(prev->app).rows());
      const double alpha =
          mcf::adaptive_temperature(n, m, {cfg.mcf.delta, cfg.mcf.epsilon});
      const auto cycle = [&](Var cue_t, Var cue_prev) {
        Var sh = t.softmax_rows(t.matmul(cue_t, t.transpose(cue_prev)), alpha);
        return t.row_dot(sh, sh);
      };
      c_inter_app = cycle(fv.app, prev->app);
      c_inter_loc = cycle(fv.loc, prev->loc);
      c_inter_sem = cycle(fv.sem, prev->sem);
    } else {
      c_inter_app = t.value(Eigen::MatrixXd::Ones(n, 1));
      c_inter_loc = t.value(Eigen::MatrixXd::Ones(n, 1));
      c_inter_sem = t.value(Eigen::MatrixXd::Ones(n, 1));
    }

    Var loc_t = t.scale_rows(fv.loc, t.mul(c_intra_loc, c_inter_loc));
    Var sem_t = t.scale_rows(fv.sem, t.mul(c_intra_sem, c_inter_sem));
    Var xf = t.hcat3(fv.app, loc_t, sem_t);
    Var f_fus =
        linear(t, t.relu(linear(t, xf, mv.mfn_w1, mv.mfn_b1)), mv.mfn_w2, mv.mfn_b2);
    fv.m_cue = t.add(t.scale_rows(fv.app, c_inter_app),
                     t.scale_rows(f_fus, t.affine(c_inter_app, -1.0, 1.0)));
  }

  // Hierarchical enhancement. Quality scores come from forward values only.
  const mga::InclusionMask mask = mga::build_inclusion_mask(fv.boxes, cfg.mga.tau_ioc);
  Eigen::VectorXd q;
  if (prev != nullptr && t.val(prev->m_cue).rows() > 0) {
    const int m = static_cast<int>(t.val(prev->m_cue).rows());
    const double alpha =
        mcf::adaptive_temperature(n, m, {cfg.mcf.delta, cfg.mcf.epsilon});
    q = mga::taq_scores(t.val(fv.m_cue), t.val(prev->m_cue), alpha).q;
  } else {
    q = Eigen::VectorXd::Ones(n);
  }

  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Var> out_rows;
  out_rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    const std::vector<int> children = mask.children_of(i);
    Var self = t.rows(fv.m_cue, {i});
    if (children.empty()) {
      out_rows.push_back(self);
      continue;
    }
    Eigen::VectorXd gate(static_cast<Eigen::Index>(children.size()));
    for (std::size_t k = 0; k < children.size(); ++k) {
      gate[static_cast<Eigen::Index>(k)] = q[children[k]] > cfg.mga.tau_q ? 1.0 : 0.0;
    }
    Var gated = t.scale_rows_const(t.rows(fv.m_cue, children), std::move(gate));
    Var query = t.matmul(self, t.transpose(mv.w_q));
    Var keys = t.matmul(gated, t.transpose(mv.w_k));
    Var values = t.matmul(gated, t.transpose(mv.w_v));
    Var scores = t.scale(t.matmul(query, t.transpose(keys)), attn_scale);
    Var attn = t.softmax_rows(scores, 1.0);
    Var mgra = t.matmul(attn, values);
    out_rows.push_back(t.add(self, t.scale(mgra, cfg.mga.lambda)));
  }
  fv.f_asso = t.vcat(out_rows);
  return fv;
}

struct PairGraph {
  ModelVars mv;
  FrameVars prev, curr;
  Var loss;
};

PairGraph build_pair(Tape& t, const TrainingPair& pair, const ModelParams& params,
                     const EngineConfig& cfg) {
  if (pair.prev.empty() || pair.curr.empty()) {
    throw std::invalid_argument("association_loss: both frames must be nonempty");
  }
  if (pair.y.rows() != static_cast<Eigen::Index>(pair.curr.size()) ||
      pair.y.cols() != static_cast<Eigen::Index>(pair.prev.size())) {
    throw std::invalid_argument("association_loss: label matrix shape mismatch");
  }
  PairGraph g;
  g.mv = bind(t, params);
  g.prev = frame_features(t, g.mv, pair.prev, nullptr, params, cfg);
  g.curr = frame_features(t, g.mv, pair.curr, &g.prev, params, cfg);
  Var s_hat =
      t.softmax_rows(t.matmul(g.curr.f_asso, t.transpose(g.prev.f_asso)), 1.0);
  Var masked = t.mul(t.value(pair.y), t.log_plus(s_hat, 1e-12));
  g.loss = t.scale(t.sum(masked), -1.0);
  return g;
}

void check_finite(const Tape& t, const PairGraph& g) {
  const double loss = t.val(g.loss)(0, 0);
  if (std::isfinite(loss)) return;
  const std::pair<const char*, Var> named[] = {
      {"prev.loc", g.prev.loc},       {"prev.m_cue", g.prev.m_cue},
      {"prev.f_asso", g.prev.f_asso}, {"curr.loc", g.curr.loc},
      {"curr.m_cue", g.curr.m_cue},   {"curr.f_asso", g.curr.f_asso},
  };
  for (const auto& [name, var] : named) {
    if (!t.val(var).allFinite()) {
      throw std::runtime_error(std::string("gradients: non-finite values in ") + name);
    }
  }
  throw std::runtime_error("gradients: non-finite loss");
}

}  // namespace

double loss_from_features(const Eigen::MatrixXd& f_t, const Eigen::MatrixXd& f_prev,
                          const Eigen::MatrixXd& y) {
  if (f_t.cols() != f_prev.cols() || y.rows() != f_t.rows() ||
      y.cols() != f_prev.rows()) {
    throw std::invalid_argument("loss_from_features: shape mismatch");
  }
  const Eigen::MatrixXd s_hat = softmax_rows(f_t * f_prev.transpose(), 1.0);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (y(i, j) != 0.0) loss -= y(i, j) * std::log(s_hat(i, j) + 1e-12);
    }
  }
  return loss;
}

double association_loss(const TrainingPair& pair, const ModelParams& params,
                        const EngineConfig& cfg) {
  Tape t;
  const PairGraph g = build_pair(t, pair, params, cfg);
  return t.val(g.loss)(0, 0);
}

PairFeatures pair_forward_values(const TrainingPair& pair, const ModelParams& params,
                                 const EngineConfig& cfg) {
  Tape t;
  const PairGraph g = build_pair(t, pair, params, cfg);
  return {t.val(g.prev.f_asso), t.val(g.curr.f_asso), t.val(g.loss)(0, 0)};
}

ParamGrads gradients(const TrainingPair& pair, const ModelParams& params,
                     const EngineConfig& cfg, double* loss_out) {
  Tape t;
  const PairGraph g = build_pair(t, pair, params, cfg);
  check_finite(t, g);
  t.backward(g.loss);

  ParamGrads grads;
  const std::vector<Var> vars = var_list(g.mv);
  std::vector<Eigen::MatrixXd*> slots = tensor_list(grads);
  for (std::size_t k = 0; k < vars.size(); ++k) {
    *slots[k] = t.grad(vars[k]);
  }
  if (loss_out != nullptr) *loss_out = t.val(g.loss)(0, 0);
  return grads;
}

OptimState OptimState::init(const ModelParams& params, const LearnConfig& cfg) {
  OptimState state;
  state.lr = cfg.lr;
  state.beta1 = cfg.beta1;
  state.beta2 = cfg.beta2;
  state.eps = cfg.eps_stab;
  for (const Eigen::MatrixXd* tensor : tensor_list(params)) {
    state.m.push_back(Eigen::MatrixXd::Zero(tensor->rows(), tensor->cols()));
    state.v.push_back(Eigen::MatrixXd::Zero(tensor->rows(), tensor->cols()));
  }
  return state;
}

void optimizer_step(ModelParams& params, const ParamGrads& grads, OptimState& state) {
  std::vector<Eigen::MatrixXd*> p = tensor_list(params);
  std::vector<const Eigen::MatrixXd*> g = tensor_list(grads);
  if (state.m.size() != p.size()) {
    throw std::invalid_argument("optimizer_step: state shape mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < p.size(); ++k) {
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * (*g[k]);
    state.v[k] =
        state.beta2 * state.v[k] + (1.0 - state.beta2) * g[k]->cwiseProduct(*g[k]);
    const Eigen::MatrixXd m_hat = state.m[k] / bc1;
    const Eigen::MatrixXd v_hat = state.v[k] / bc2;
    *p[k] -= state.lr *
             m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + state.eps).matrix());
  }
}

TrainResult train(const std::vector<TrainingPair>& pairs, const EngineConfig& cfg,
                  int epochs, std::uint64_t seed) {
  if (pairs.empty()) throw std::invalid_argument("train: empty dataset");
  TrainResult result;
  result.params = ModelParams::init(cfg.mcf.d, cfg.mcf.h, seed);
  OptimState state = OptimState::init(result.params, cfg.learn);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double total = 0.0;
    long counted = 0;
    for (const TrainingPair& pair : pairs) {
      if (pair.prev.empty() || pair.curr.empty()) continue;
      double loss = 0.0;
      const ParamGrads grads = gradients(pair, result.params, cfg, &loss);
      optimizer_step(result.params, grads, state);
      total += loss;
      counted += 1;
    }
    result.epoch_loss.push_back(counted > 0 ? total / counted : 0.0);
  }
  return result;
}

}  // namespace fusetrack::learn
