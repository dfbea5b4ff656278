#include <map>
#include <set>

#include "doctest.h"
#include "fusetrack/simgen.hpp"

using namespace fusetrack;

TEST_SUITE("simgen") {

TEST_CASE("degenerate single-object scenario") {
  simgen::ScenarioConfig cfg;
  cfg.seed = 3;
  cfg.num_objects = 1;
  cfg.num_frames = 25;
  cfg.embed_dim = 8;
  const simgen::Scenario s = simgen::generate(cfg);
  REQUIRE(s.frames.size() == 25);
  for (const Frame& f : s.frames) {
    REQUIRE(f.detections.size() == 1);
    CHECK(f.detections[0].score >= 0.5);
    CHECK(f.detections[0].class_id == 0);
    CHECK(f.detections[0].box.x1 >= 0.0);
    CHECK(f.detections[0].box.x2 <= cfg.image_w);
  }
  CHECK(s.truth.flickers.empty());
  CHECK(s.truth.occlusions.empty());
  for (const auto& records : s.truth.records) {
    REQUIRE(records.size() == 1);
    CHECK(records[0].identity == 0);
    CHECK(records[0].visible);
  }
}

TEST_CASE("generation is bit-deterministic") {
  simgen::ScenarioConfig cfg;
  cfg.seed = 17;
  cfg.num_frames = 30;
  cfg.num_objects = 6;
  cfg.embed_dim = 8;
  cfg.flicker_prob = 0.1;
  cfg.occlusion_prob = 0.02;
  cfg.child_spawn_prob = 0.5;
  cfg.clutter_rate = 0.4;
  const simgen::Scenario a = simgen::generate(cfg);
  const simgen::Scenario b = simgen::generate(cfg);
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t f = 0; f < a.frames.size(); ++f) {
    REQUIRE(a.frames[f].detections.size() == b.frames[f].detections.size());
    for (std::size_t i = 0; i < a.frames[f].detections.size(); ++i) {
      CHECK(a.frames[f].detections[i].box.x1 == b.frames[f].detections[i].box.x1);
      CHECK(a.frames[f].detections[i].score == b.frames[f].detections[i].score);
      CHECK(a.frames[f].detections[i].features.app ==
            b.frames[f].detections[i].features.app);
    }
  }
  CHECK(a.truth.flickers.size() == b.truth.flickers.size());
}

TEST_CASE("children are fully contained in their parents") {
  simgen::ScenarioConfig cfg;
  cfg.seed = 23;
  cfg.num_frames = 20;
  cfg.num_objects = 5;
  cfg.embed_dim = 8;
  cfg.child_spawn_prob = 1.0;
  cfg.children_per_parent = 2;
  const simgen::Scenario s = simgen::generate(cfg);
  // Identities >= num_objects are children of parent (id - num_objects)/2.
  for (std::size_t f = 0; f < s.truth.records.size(); ++f) {
    std::map<int, BoundingBox> boxes;
    for (const simgen::TruthRecord& rec : s.truth.records[f]) {
      boxes.emplace(rec.identity, rec.box);
    }
    for (const simgen::TruthRecord& rec : s.truth.records[f]) {
      if (rec.identity < cfg.num_objects) continue;
      const int parent = (rec.identity - cfg.num_objects) / cfg.children_per_parent;
      CHECK(ioc(boxes.at(parent), rec.box) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("flicker changes scores only") {
  simgen::ScenarioConfig base;
  base.seed = 29;
  base.num_frames = 40;
  base.num_objects = 6;
  base.embed_dim = 8;
  base.flicker_prob = 0.0;
  simgen::ScenarioConfig flicked = base;
  flicked.flicker_prob = 0.3;

  const simgen::Scenario a = simgen::generate(base);
  const simgen::Scenario b = simgen::generate(flicked);
  REQUIRE(!b.truth.flickers.empty());

  std::set<std::pair<std::int64_t, int>> events;
  for (const simgen::FlickerEvent& ev : b.truth.flickers) {
    events.insert({ev.frame, ev.identity});
  }
  for (std::size_t f = 0; f < a.frames.size(); ++f) {
    REQUIRE(a.frames[f].detections.size() == b.frames[f].detections.size());
    for (std::size_t i = 0; i < a.frames[f].detections.size(); ++i) {
      const Detection& da = a.frames[f].detections[i];
      const Detection& db = b.frames[f].detections[i];
      CHECK(da.box.x1 == db.box.x1);
      CHECK(da.box.y2 == db.box.y2);
      CHECK(da.features.app == db.features.app);
      CHECK(da.features.sem == db.features.sem);
      const int identity = a.truth.records[f][i].identity;
      if (events.count({static_cast<std::int64_t>(f), identity})) {
        CHECK(db.score <= flicked.flicker_hi);
        CHECK(db.score >= flicked.flicker_lo);
      } else {
        CHECK(da.score == db.score);
      }
    }
  }
}

TEST_CASE("forced flicker hits exactly the requested frame and identity") {
  simgen::ScenarioConfig cfg;
  cfg.seed = 31;
  cfg.num_frames = 10;
  cfg.num_objects = 5;
  cfg.embed_dim = 8;
  cfg.flicker_prob = 1.0;
  cfg.flicker_frames = {5};
  cfg.flicker_identities = {3};
  const simgen::Scenario s = simgen::generate(cfg);
  REQUIRE(s.truth.flickers.size() == 1);
  CHECK(s.truth.flickers[0].frame == 5);
  CHECK(s.truth.flickers[0].identity == 3);
  const std::vector<simgen::TruthRecord>& recs = s.truth.records[5];
  for (const simgen::TruthRecord& rec : recs) {
    if (rec.identity == 3) {
      CHECK(rec.score >= 0.05);
      CHECK(rec.score <= 0.5);
    } else {
      CHECK(rec.score > 0.5);
    }
  }
}

TEST_CASE("trajectories are dense outside logged occlusion ranges") {
  simgen::ScenarioConfig cfg;
  cfg.seed = 37;
  cfg.num_frames = 60;
  cfg.num_objects = 6;
  cfg.embed_dim = 8;
  cfg.occlusion_prob = 0.04;
  cfg.child_spawn_prob = 0.4;
  const simgen::Scenario s = simgen::generate(cfg);
  REQUIRE(!s.truth.occlusions.empty());

  std::map<int, std::set<std::int64_t>> occluded;
  for (const simgen::OcclusionEvent& ev : s.truth.occlusions) {
    for (std::int64_t f = ev.frame_start; f <= ev.frame_end; ++f) {
      occluded[ev.identity].insert(f);
    }
  }
  for (std::size_t f = 0; f < s.truth.records.size(); ++f) {
    for (const simgen::TruthRecord& rec : s.truth.records[f]) {
      const bool in_logged_range =
          occluded.count(rec.identity) &&
          occluded[rec.identity].count(static_cast<std::int64_t>(f));
      CHECK(rec.visible == !in_logged_range);
    }
  }
}

TEST_CASE("to_training_pairs identity labels") {
  simgen::ScenarioConfig cfg;
  cfg.seed = 41;
  cfg.num_frames = 2;
  cfg.num_objects = 1;
  cfg.embed_dim = 8;
  const simgen::Scenario s = simgen::generate(cfg);
  const auto pairs = simgen::to_training_pairs(s.frames, s.truth);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].y.rows() == 1);
  CHECK(pairs[0].y.cols() == 1);
  CHECK(pairs[0].y(0, 0) == 1.0);
}

TEST_CASE("to_training_pairs marks clutter unmatchable") {
  simgen::ScenarioConfig cfg;
  cfg.seed = 43;
  cfg.num_frames = 16;
  cfg.num_objects = 3;
  cfg.embed_dim = 8;
  cfg.clutter_rate = 1.5;
  const simgen::Scenario s = simgen::generate(cfg);
  const auto pairs = simgen::to_training_pairs(s.frames, s.truth);
  REQUIRE(!pairs.empty());
  long clutter_rows = 0;
  for (const learn::TrainingPair& pair : pairs) {
    // Row/column sums never exceed 1: identities match at most once.
    for (int i = 0; i < pair.y.rows(); ++i) CHECK(pair.y.row(i).sum() <= 1.0);
    for (int j = 0; j < pair.y.cols(); ++j) CHECK(pair.y.col(j).sum() <= 1.0);
    // Clutter detections (beyond the object count) have all-zero rows.
    for (std::size_t i = s.truth.records[0].size(); i < pair.curr.size(); ++i) {
      clutter_rows += 1;
      CHECK(pair.y.row(static_cast<Eigen::Index>(i)).sum() == 0.0);
    }
  }
  CHECK(clutter_rows > 0);
}

TEST_CASE("occlusion drops the parent but keeps its children visible") {
  simgen::ScenarioConfig cfg;
  cfg.seed = 47;
  cfg.num_frames = 50;
  cfg.num_objects = 4;
  cfg.embed_dim = 8;
  cfg.occlusion_prob = 0.05;
  cfg.child_spawn_prob = 1.0;
  const simgen::Scenario s = simgen::generate(cfg);
  REQUIRE(!s.truth.occlusions.empty());
  for (const simgen::OcclusionEvent& ev : s.truth.occlusions) {
    CHECK(ev.partial);  // every object has children here
    const std::size_t f = static_cast<std::size_t>(ev.frame_start);
    std::set<int> detected;
    for (const Detection& det : s.frames[f].detections) {
      (void)det;
    }
    for (const simgen::TruthRecord& rec : s.truth.records[f]) {
      if (rec.identity == ev.identity) CHECK_FALSE(rec.visible);
      if (rec.identity >= cfg.num_objects &&
          (rec.identity - cfg.num_objects) / cfg.children_per_parent == ev.identity) {
        CHECK(rec.visible);
      }
    }
  }
}

}  // TEST_SUITE
