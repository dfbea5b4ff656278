#include "fusetrack/tcp.hpp"

#include <algorithm>
#include <stdexcept>

#include "fusetrack/numeric.hpp"

namespace fusetrack::tcp {

std::vector<TcpSource> select_sources(const std::vector<Detection>& dets,
                                      const Eigen::MatrixXd& features,
                                      const TcpConfig& cfg) {
  std::vector<TcpSource> out;
  for (int i : nms_keep_indices(dets, cfg.nms_iou)) {
    if (dets[i].score > cfg.tau_high) {
      out.push_back({dets[i].box, dets[i].class_id, dets[i].score,
                     features.row(i).transpose()});
    }
  }
  return out;
}

std::vector<TcpCandidate> select_candidates(const std::vector<Detection>& dets,
                                            const Eigen::MatrixXd& features,
                                            const TcpConfig& cfg) {
  std::vector<TcpCandidate> out;
  for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
    if (dets[i].score >= cfg.tau_low && dets[i].score <= cfg.tau_high) {
      out.push_back({i, dets[i].box, dets[i].class_id, dets[i].score,
                     features.row(i).transpose()});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const TcpCandidate& a,
                                              const TcpCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.x1 != b.box.x1) return a.box.x1 < b.box.x1;
    return a.box.y1 < b.box.y1;
  });
  if (static_cast<int>(out.size()) > cfg.candidate_cap) {
    out.resize(cfg.candidate_cap);
  }
  return out;
}

BipartiteEdges edge_weights(const std::vector<TcpSource>& sources,
                            const std::vector<TcpCandidate>& candidates,
                            double beta) {
  const int ns = static_cast<int>(sources.size());
  const int nc = static_cast<int>(candidates.size());
  BipartiteEdges edges;
  edges.asso.resize(ns, nc);
  edges.iou.resize(ns, nc);
  edges.same_class_sources.resize(nc);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < nc; ++j) {
      edges.asso(i, j) = cosine_similarity(sources[i].feature, candidates[j].feature);
      edges.iou(i, j) = iou(sources[i].box, candidates[j].box);
    }
  }
  edges.combined = edges.asso + beta * edges.iou;
  for (int j = 0; j < nc; ++j) {
    for (int i = 0; i < ns; ++i) {
      if (sources[i].class_id == candidates[j].class_id) {
        edges.same_class_sources[j].push_back(i);
      }
    }
  }
  return edges;
}

double propagation_strength(double mean_w, int count, const TcpConfig& cfg) {
  if (count <= 0) return 0.0;
  for (const TcpTier& tier : cfg.tiers) {
    if (mean_w > tier.min_mean_w && count >= tier.min_count) return tier.eta;
  }
  return 0.0;
}

std::vector<double> propagate(const std::vector<TcpCandidate>& candidates,
                              const std::vector<TcpSource>& sources,
                              const BipartiteEdges& edges, const TcpConfig& cfg) {
  std::vector<double> adjusted(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const std::vector<int>& same = edges.same_class_sources[j];
    const double s_j = candidates[j].score;

    double w_sum = 0.0, ws_sum = 0.0, w_mean = 0.0;
    for (int i : same) {
      const double w = edges.combined(i, static_cast<int>(j));
      w_sum += w;
      ws_sum += w * sources[i].score;
      w_mean += w;
    }
    const int count = static_cast<int>(same.size());
    if (count > 0) w_mean /= count;

    // A non-positive total weight means every match is anti-correlated;
    // treat the set as empty rather than producing a degenerate blend.
    if (count == 0 || w_sum <= 0.0) {
      adjusted[j] = s_j;
      continue;
    }
    const double eta = propagation_strength(w_mean, count, cfg);
    const double blended = (1.0 - eta) * s_j + eta * (ws_sum / w_sum);
    adjusted[j] = std::max(blended, s_j);
  }
  return adjusted;
}

std::vector<Recovery> recover(const std::vector<TcpCandidate>& candidates,
                              const std::vector<double>& adjusted,
                              const TcpConfig& cfg) {
  if (adjusted.size() != candidates.size()) {
    throw std::invalid_argument("recover: adjusted score count mismatch");
  }
  std::vector<Recovery> out;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (adjusted[j] > cfg.tau_high) {
      out.push_back({candidates[j].det_index, adjusted[j]});
    }
  }
  return out;
}

}  // namespace fusetrack::tcp
