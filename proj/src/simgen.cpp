#include "fusetrack/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fusetrack/rng.hpp"

namespace fusetrack::simgen {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

// Independent streams so that toggling one event family never shifts the
// draws of another; this is what makes a flicker run differ from its
// zero-flicker twin only in scores.
enum Stream : std::uint64_t {
  kSetup = 1,
  kMotion = 2,
  kEvents = 3,
  kScores = 4,
  kEmbeddings = 5,
  kClutter = 6,
  kDrift = 7,
};

struct ObjectState {
  int identity = -1;
  int class_id = 0;
  double w = 0, h = 0;
  double cx = 0, cy = 0;
  double speed = 0;
  double vx = 0, vy = 0;
  Eigen::VectorXd app_latent;
  // Children move rigidly with the parent.
  struct Child {
    int identity = -1;
    int class_id = 0;
    double fx = 0, fy = 0, fw = 0, fh = 0;
    Eigen::VectorXd app_latent;
  };
  std::vector<Child> children;
  std::int64_t occluded_until = -1;  // inclusive; -1 when visible
};

BoundingBox object_box(const ObjectState& o) {
  return BoundingBox(o.cx - o.w / 2, o.cy - o.h / 2, o.cx + o.w / 2, o.cy + o.h / 2);
}

BoundingBox child_box(const ObjectState& o, const ObjectState::Child& c) {
  const BoundingBox p = object_box(o);
  return BoundingBox(p.x1 + c.fx * o.w, p.y1 + c.fy * o.h,
                     p.x1 + (c.fx + c.fw) * o.w, p.y1 + (c.fy + c.fh) * o.h);
}

int poisson_count(Rng& rng, double rate) {
  if (rate <= 0.0) return 0;
  const double limit = std::exp(-rate);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform();
  } while (p > limit);
  return k - 1;
}

bool contains_or_empty(const std::vector<std::int64_t>& filter, std::int64_t v) {
  if (filter.empty()) return true;
  return std::find(filter.begin(), filter.end(), v) != filter.end();
}

bool contains_or_empty(const std::vector<int>& filter, int v) {
  if (filter.empty()) return true;
  return std::find(filter.begin(), filter.end(), v) != filter.end();
}

}  // namespace

void ScenarioConfig::validate() const {
  require(image_w > 0 && image_h > 0, "scenario: image size must be positive");
  require(num_frames >= 1, "scenario: num_frames must be >= 1");
  require(num_objects >= 1, "scenario: num_objects must be >= 1");
  require(num_categories >= 1, "scenario: num_categories must be >= 1");
  require(novel_fraction >= 0.0 && novel_fraction <= 1.0,
          "scenario: novel_fraction must lie in [0,1]");
  require(embed_dim >= 2, "scenario: embed_dim must be >= 2");
  require(embed_scale > 0.0, "scenario: embed_scale must be positive");
  require(min_speed >= 0.0 && max_speed >= min_speed, "scenario: bad speed range");
  require(min_obj_size > 0.0 && max_obj_size >= min_obj_size,
          "scenario: bad object size range");
  require(max_obj_size < image_w && max_obj_size < image_h,
          "scenario: objects must fit the image");
  for (double p : {turn_prob, flicker_prob, occlusion_prob, child_spawn_prob}) {
    require(p >= 0.0 && p <= 1.0, "scenario: probabilities must lie in [0,1]");
  }
  require(app_noise >= 0.0 && sem_noise >= 0.0 && sem_noise_novel >= 0.0,
          "scenario: noise sigmas must be >= 0");
  require(app_within_class_spread >= 0.0, "scenario: spread must be >= 0");
  require(score_lo > 0.0 && score_lo <= score_hi && score_hi <= 1.0,
          "scenario: bad visible score range");
  require(flicker_lo >= 0.0 && flicker_lo <= flicker_hi && flicker_hi <= 1.0,
          "scenario: bad flicker score range");
  require(occlusion_min_len >= 1 && occlusion_max_len >= occlusion_min_len,
          "scenario: bad occlusion duration range");
  require(children_per_parent >= 1, "scenario: children_per_parent must be >= 1");
  require(clutter_rate >= 0.0, "scenario: clutter_rate must be >= 0");
}

Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  const int d = cfg.embed_dim;

  Rng setup(derive_seed(cfg.seed, kSetup));
  Rng motion(derive_seed(cfg.seed, kMotion));
  Rng events(derive_seed(cfg.seed, kEvents));
  Rng scores(derive_seed(cfg.seed, kScores));
  Rng embeds(derive_seed(cfg.seed, kEmbeddings));
  Rng clutter(derive_seed(cfg.seed, kClutter));
  Rng drift(derive_seed(cfg.seed, kDrift));

  // Category latents; the tail of the pool is the novel split.
  const int num_novel = static_cast<int>(
      std::ceil(cfg.novel_fraction * static_cast<double>(cfg.num_categories)));
  std::vector<Eigen::VectorXd> sem_latent(cfg.num_categories);
  std::vector<Eigen::VectorXd> app_anchor(cfg.num_categories);
  for (int c = 0; c < cfg.num_categories; ++c) {
    sem_latent[c] = setup.unit_vector(d);
    app_anchor[c] = setup.unit_vector(d);
  }
  const auto sem_sigma = [&](int c) {
    return c >= cfg.num_categories - num_novel ? cfg.sem_noise_novel : cfg.sem_noise;
  };
  const auto make_app_latent = [&](int c) {
    const Eigen::VectorXd v =
        app_anchor[c] + cfg.app_within_class_spread * setup.unit_vector(d);
    return (v / v.norm()).eval();
  };

  // Top-level objects, placed with little initial overlap.
  std::vector<ObjectState> objects(cfg.num_objects);
  int next_identity = cfg.num_objects;
  for (int i = 0; i < cfg.num_objects; ++i) {
    ObjectState& o = objects[i];
    o.identity = i;
    o.class_id = i % cfg.num_categories;
    o.app_latent = make_app_latent(o.class_id);
    o.w = setup.uniform(cfg.min_obj_size, cfg.max_obj_size);
    o.h = setup.uniform(cfg.min_obj_size, cfg.max_obj_size);
    for (int attempt = 0; attempt < 50; ++attempt) {
      o.cx = setup.uniform(o.w / 2, cfg.image_w - o.w / 2);
      o.cy = setup.uniform(o.h / 2, cfg.image_h - o.h / 2);
      bool crowded = false;
      for (int j = 0; j < i; ++j) {
        if (iou(object_box(o), object_box(objects[j])) > 0.1) {
          crowded = true;
          break;
        }
      }
      if (!crowded) break;
    }
    o.speed = setup.uniform(cfg.min_speed, cfg.max_speed);
    const double angle = setup.uniform(0.0, 2.0 * M_PI);
    o.vx = o.speed * std::cos(angle);
    o.vy = o.speed * std::sin(angle);
    if (setup.bernoulli(cfg.child_spawn_prob)) {
      for (int k = 0; k < cfg.children_per_parent; ++k) {
        ObjectState::Child c;
        c.identity = next_identity++;
        c.class_id = cfg.child_same_class ? o.class_id
                                          : setup.uniform_int(0, cfg.num_categories - 1);
        c.fw = setup.uniform(0.25, 0.4);
        c.fh = setup.uniform(0.25, 0.4);
        c.fx = setup.uniform(0.02, 0.96 - c.fw);
        c.fy = setup.uniform(0.02, 0.96 - c.fh);
        c.app_latent = make_app_latent(c.class_id);
        o.children.push_back(std::move(c));
      }
    }
  }

  Scenario out;
  out.truth.image_w = cfg.image_w;
  out.truth.image_h = cfg.image_h;

  for (std::int64_t f = 0; f < cfg.num_frames; ++f) {
    // Motion update (frame 0 keeps the initial placement).
    if (f > 0) {
      for (ObjectState& o : objects) {
        if (motion.bernoulli(cfg.turn_prob)) {
          const double angle = motion.uniform(0.0, 2.0 * M_PI);
          o.vx = o.speed * std::cos(angle);
          o.vy = o.speed * std::sin(angle);
        }
        o.cx += o.vx;
        o.cy += o.vy;
        if (o.cx - o.w / 2 < 0) {
          o.cx = o.w / 2;
          o.vx = std::abs(o.vx);
        } else if (o.cx + o.w / 2 > cfg.image_w) {
          o.cx = cfg.image_w - o.w / 2;
          o.vx = -std::abs(o.vx);
        }
        if (o.cy - o.h / 2 < 0) {
          o.cy = o.h / 2;
          o.vy = std::abs(o.vy);
        } else if (o.cy + o.h / 2 > cfg.image_h) {
          o.cy = cfg.image_h - o.h / 2;
          o.vy = -std::abs(o.vy);
        }
      }
    }

    // Occlusion bookkeeping. The appearance drift fires once, when the
    // object becomes visible again.
    for (ObjectState& o : objects) {
      if (o.occluded_until >= 0 && f > o.occluded_until) {
        o.occluded_until = -1;
        if (cfg.occlusion_drift > 0.0) {
          const Eigen::VectorXd v =
              o.app_latent + cfg.occlusion_drift * drift.unit_vector(d);
          o.app_latent = v / v.norm();
        }
      }
      if (o.occluded_until < 0 && events.bernoulli(cfg.occlusion_prob)) {
        const int len = events.uniform_int(cfg.occlusion_min_len, cfg.occlusion_max_len);
        o.occluded_until = std::min<std::int64_t>(f + len - 1, cfg.num_frames - 1);
        out.truth.occlusions.push_back(
            {f, o.occluded_until, o.identity, !o.children.empty()});
      }
    }

    Frame frame;
    frame.frame_id = f;
    frame.image_w = cfg.image_w;
    frame.image_h = cfg.image_h;
    std::vector<TruthRecord> records;

    const auto emit = [&](int identity, int class_id, const BoundingBox& box,
                          const Eigen::VectorXd& app_latent, bool visible) {
      TruthRecord rec;
      rec.identity = identity;
      rec.box = box;
      rec.class_id = class_id;
      rec.visible = visible;
      if (!visible) {
        rec.score = 0.0;
        rec.app = Eigen::VectorXd::Zero(d);
        rec.sem = Eigen::VectorXd::Zero(d);
        records.push_back(std::move(rec));
        return;
      }
      const Eigen::VectorXd app =
          cfg.embed_scale * (app_latent + embeds.gaussian_vector(d, cfg.app_noise));
      const Eigen::VectorXd sem =
          cfg.embed_scale *
          (sem_latent[class_id] + embeds.gaussian_vector(d, sem_sigma(class_id)));
      const bool flickered = events.bernoulli(cfg.flicker_prob) &&
                             contains_or_empty(cfg.flicker_frames, f) &&
                             contains_or_empty(cfg.flicker_identities, identity);
      const double u = scores.uniform();
      const double score = flickered
                               ? cfg.flicker_lo + u * (cfg.flicker_hi - cfg.flicker_lo)
                               : cfg.score_lo + u * (cfg.score_hi - cfg.score_lo);
      if (flickered) out.truth.flickers.push_back({f, identity});

      rec.score = score;
      rec.app = app;
      rec.sem = sem;
      records.push_back(rec);

      Detection det;
      det.box = box;
      det.class_id = class_id;
      det.score = score;
      det.features.app = app;
      det.features.sem = sem;
      det.features.loc = Eigen::VectorXd::Zero(d);  // filled by the engine
      const std::array<double, 4> raw = normalize_box(box, cfg.image_w, cfg.image_h);
      det.raw_loc = Eigen::Vector4d(raw[0], raw[1], raw[2], raw[3]);
      frame.detections.push_back(std::move(det));
    };

    for (const ObjectState& o : objects) {
      const bool occluded = o.occluded_until >= 0;
      emit(o.identity, o.class_id, object_box(o), o.app_latent, !occluded);
      for (const ObjectState::Child& c : o.children) {
        emit(c.identity, c.class_id, child_box(o, c), c.app_latent, true);
      }
    }

    const int num_clutter = poisson_count(clutter, cfg.clutter_rate);
    for (int k = 0; k < num_clutter; ++k) {
      const double w = clutter.uniform(cfg.min_obj_size, cfg.max_obj_size);
      const double h = clutter.uniform(cfg.min_obj_size, cfg.max_obj_size);
      const double cx = clutter.uniform(w / 2, cfg.image_w - w / 2);
      const double cy = clutter.uniform(h / 2, cfg.image_h - h / 2);
      const int class_id = clutter.uniform_int(0, cfg.num_categories - 1);
      Detection det;
      det.box = BoundingBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2);
      det.class_id = class_id;
      det.score = clutter.uniform(cfg.flicker_lo, cfg.score_hi);
      det.features.app = cfg.embed_scale * (clutter.unit_vector(d) +
                                            clutter.gaussian_vector(d, cfg.app_noise));
      det.features.sem = cfg.embed_scale * (sem_latent[class_id] +
                                            clutter.gaussian_vector(d, sem_sigma(class_id)));
      det.features.loc = Eigen::VectorXd::Zero(d);
      const std::array<double, 4> raw = normalize_box(det.box, cfg.image_w, cfg.image_h);
      det.raw_loc = Eigen::Vector4d(raw[0], raw[1], raw[2], raw[3]);
      frame.detections.push_back(std::move(det));
    }

    out.frames.push_back(std::move(frame));
    out.truth.frame_ids.push_back(f);
    out.truth.records.push_back(std::move(records));
  }
  return out;
}

std::vector<learn::TrainingPair> to_training_pairs(const std::vector<Frame>& frames,
                                                   const ScenarioTruth& truth) {
  if (frames.size() != truth.records.size()) {
    throw std::invalid_argument("to_training_pairs: frame/truth length mismatch");
  }

  // Detections map back to identities through an exact box + class match
  // against the visible truth records of their frame; clutter stays at -1.
  const auto identities_of = [&](std::size_t f) {
    std::vector<int> ids(frames[f].detections.size(), -1);
    for (std::size_t i = 0; i < frames[f].detections.size(); ++i) {
      const Detection& det = frames[f].detections[i];
      for (const TruthRecord& rec : truth.records[f]) {
        if (!rec.visible || rec.class_id != det.class_id) continue;
        if (std::abs(rec.box.x1 - det.box.x1) <= 1e-6 &&
            std::abs(rec.box.y1 - det.box.y1) <= 1e-6 &&
            std::abs(rec.box.x2 - det.box.x2) <= 1e-6 &&
            std::abs(rec.box.y2 - det.box.y2) <= 1e-6) {
          ids[i] = rec.identity;
          break;
        }
      }
    }
    return ids;
  };

  std::vector<learn::TrainingPair> pairs;
  for (std::size_t f = 0; f + 1 < frames.size(); ++f) {
    const std::vector<Detection>& prev = frames[f].detections;
    const std::vector<Detection>& curr = frames[f + 1].detections;
    if (prev.empty() || curr.empty()) continue;
    const std::vector<int> prev_ids = identities_of(f);
    const std::vector<int> curr_ids = identities_of(f + 1);
    learn::TrainingPair pair;
    pair.prev = prev;
    pair.curr = curr;
    pair.y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(curr.size()),
                                   static_cast<Eigen::Index>(prev.size()));
    for (std::size_t i = 0; i < curr.size(); ++i) {
      if (curr_ids[i] < 0) continue;
      for (std::size_t j = 0; j < prev.size(); ++j) {
        if (prev_ids[j] == curr_ids[i]) pair.y(i, j) = 1.0;
      }
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace fusetrack::simgen
