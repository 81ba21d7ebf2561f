// Copyright 2026 The fmse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <Eigen/LU>

#include "fixtures.hpp"
#include "fmse/calib_graph.hpp"
#include "fmse/error.hpp"

using namespace fmse;
using namespace fmse::testing;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

double max_abs(const Eigen::Matrix4d& a, const Eigen::Matrix4d& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Formula oracle on plain homogeneous matrices.
Eigen::Matrix4d oracle_between(const Eigen::Matrix4d& t_ba, const Eigen::Matrix4d& t_ca) {
  return t_ba * t_ca.inverse();
}

std::vector<SensorId> vehicle_sensors() {
  std::vector<SensorId> out;
  for (const auto& spec : realistic_meta().sensor_registry)
    if (spec.id.agent == Agent::Vehicle) out.push_back(spec.id);
  return out;
}

CalibrationGraph random_graph(Rng& rng, std::size_t sensors) {
  CalibrationGraph g;
  g.add(root_sensor(Agent::Vehicle), RigidTransform::identity());
  std::size_t added = 0;
  for (const auto& id : vehicle_sensors()) {
    if (added + 1 >= sensors) break;
    if (id == root_sensor(Agent::Vehicle)) continue;
    g.add(id, random_transform(rng));
    ++added;
  }
  return g;
}

}  // namespace

TEST_CASE("root registration") {
  CalibrationGraph g;
  CHECK_FALSE(g.add(root_sensor(Agent::Vehicle), RigidTransform::identity()).has_value());
  CHECK(code_of([&] { g.add(root_sensor(Agent::Vehicle), RigidTransform::from_translation({0.1, 0, 0})); }) ==
        ErrorCode::NonIdentityRoot);
  CHECK(g.root(Agent::Vehicle) == root_sensor(Agent::Vehicle));
  CHECK(g.root(Agent::Tower) == root_sensor(Agent::Tower));
}

TEST_CASE("lookup returns the stored transform exactly") {
  Rng rng(21);
  CalibrationGraph g;
  const SensorId cam{Agent::Vehicle, "FRONT_LEFT"};
  const auto t = random_transform(rng);
  g.add(cam, t);
  REQUIRE(g.lookup(cam) != nullptr);
  CHECK(*g.lookup(cam) == t);
  CHECK(g.lookup(SensorId{Agent::Vehicle, "BACK_LEFT"}) == nullptr);
}

TEST_CASE("registry restriction") {
  CalibrationGraph g({root_sensor(Agent::Vehicle), SensorId{Agent::Vehicle, "FRONT_LEFT"}});
  g.add(SensorId{Agent::Vehicle, "FRONT_LEFT"}, RigidTransform::identity());
  CHECK(code_of([&] { g.add(SensorId{Agent::Vehicle, "BACK_LEFT"}, RigidTransform::identity()); }) ==
        ErrorCode::UnregisteredSensor);
}

TEST_CASE("overwrite is last write wins and logged") {
  Rng rng(22);
  CalibrationGraph g;
  const SensorId cam{Agent::Vehicle, "FRONT_LEFT"};
  const auto first = random_transform(rng);
  const auto second = random_transform(rng);
  CHECK_FALSE(g.add(cam, first));
  const auto change = g.add(cam, second);
  REQUIRE(change);
  CHECK(change->sensor == cam);
  CHECK(change->previous == first);
  CHECK(change->replacement == second);
  CHECK(*g.lookup(cam) == second);
  CHECK(g.change_log().size() == 1);
}

TEST_CASE("transform_between trivial cases") {
  Rng rng(23);
  CalibrationGraph g;
  const SensorId root = root_sensor(Agent::Vehicle);
  const SensorId b{Agent::Vehicle, "FRONT_LEFT"};
  g.add(root, RigidTransform::identity());
  const auto t_ba = random_transform(rng);
  g.add(b, t_ba);
  CHECK(max_abs_difference(g.transform_between(b, b), RigidTransform::identity()) < 1e-12);
  CHECK(max_abs_difference(g.transform_between(b, root), t_ba) < 1e-12);
}

TEST_CASE("transform_between matches the matrix-product oracle") {
  Rng rng(24);
  const SensorId b{Agent::Vehicle, "FRONT_LEFT"};
  const SensorId c{Agent::Vehicle, "BACK_RIGHT"};
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    CalibrationGraph g;
    const auto t_ba = random_transform(rng, 50.0);
    const auto t_ca = random_transform(rng, 50.0);
    g.add(b, t_ba);
    g.add(c, t_ca);
    worst = std::max(worst, max_abs(g.transform_between(b, c).matrix(), oracle_between(t_ba.matrix(), t_ca.matrix())));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("transform_between errors") {
  CalibrationGraph g;
  const SensorId cam{Agent::Vehicle, "FRONT_LEFT"};
  const SensorId tower_cam{Agent::Tower, "TOWER_CAM_1"};
  g.add(cam, RigidTransform::identity());
  g.add(tower_cam, RigidTransform::identity());
  CHECK(code_of([&] { g.transform_between(cam, SensorId{Agent::Vehicle, "BACK_LEFT"}); }) ==
        ErrorCode::UnregisteredSensor);
  CHECK(code_of([&] { g.transform_between(cam, tower_cam); }) == ErrorCode::CrossAgent);
}

TEST_CASE("inverse and triangle identities") {
  Rng rng(25);
  const auto g = random_graph(rng, 8);
  const auto ids = g.sensors(Agent::Vehicle);
  REQUIRE(ids.size() == 8);
  double inverse_err = 0, triangle_err = 0;
  for (const auto& b : ids) {
    for (const auto& c : ids) {
      inverse_err = std::max(inverse_err, max_abs(g.transform_between(b, c).matrix(),
                                                  g.transform_between(c, b).matrix().inverse()));
      for (const auto& d : ids) {
        const Eigen::Matrix4d chained = g.transform_between(b, c).matrix() * g.transform_between(c, d).matrix();
        triangle_err = std::max(triangle_err, max_abs(g.transform_between(b, d).matrix(), chained));
      }
    }
  }
  CHECK(inverse_err < 1e-9);
  CHECK(triangle_err < 1e-9);
}

TEST_CASE("consistency check") {
  Rng rng(26);
  SUBCASE("two sensors") {
    const auto g = random_graph(rng, 2);
    const auto r = g.consistency_check();
    CHECK(r.max_residual < 1e-12);
    CHECK(r.triples_checked == 8);
  }
  SUBCASE("five sensors") {
    const auto g = random_graph(rng, 5);
    const auto r = g.consistency_check();
    CHECK(r.max_residual < 1e-9);
    CHECK(r.triples_checked == 125);
  }
  SUBCASE("after ten thousand overwrites") {
    auto g = random_graph(rng, 5);
    const auto ids = g.sensors(Agent::Vehicle);
    std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
    for (int i = 0; i < 10000; ++i) {
      const auto& id = ids[pick(rng)];
      if (id == root_sensor(Agent::Vehicle)) continue;
      g.add(id, random_transform(rng, 100.0));
    }
    CHECK(g.consistency_check().max_residual < 1e-9);
  }
}

TEST_CASE("re-rooting preserves pairwise transforms") {
  Rng rng(27);
  const auto g = random_graph(rng, 8);
  const auto ids = g.sensors(Agent::Vehicle);
  for (const auto& new_root : ids) {
    const auto r = g.rerooted(new_root);
    CHECK(r.root(Agent::Vehicle) == new_root);
    CHECK(max_abs_difference(*r.lookup(new_root), RigidTransform::identity()) < 1e-12);
    double worst = 0;
    for (const auto& b : ids)
      for (const auto& c : ids)
        worst = std::max(worst, max_abs_difference(g.transform_between(b, c), r.transform_between(b, c)));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("meta round trip") {
  Rng rng(28);
  SUBCASE("vehicle root only") {
    DatasetMeta meta = small_meta();
    meta.agents = {Agent::Vehicle};
    std::erase_if(meta.sensor_registry, [](const SensorSpec& s) { return s.id.agent == Agent::Tower; });
    std::erase_if(meta.intrinsics, [](const auto& kv) { return kv.first.agent == Agent::Tower; });
    meta.calibration.clear();
    meta.calibration[root_sensor(Agent::Vehicle)] = RigidTransform::identity();
    const auto g = CalibrationGraph::load_from_meta(meta);
    CHECK(g.size() == 1);
    CHECK(*g.lookup(root_sensor(Agent::Vehicle)) == RigidTransform::identity());
  }
  SUBCASE("save after load is the identity") {
    for (int i = 0; i < 20; ++i) {
      DatasetMeta meta = realistic_meta();
      for (auto& [id, t] : meta.calibration)
        if (id != root_sensor(id.agent)) t = random_transform(rng);
      const auto g = CalibrationGraph::load_from_meta(meta);
      CHECK(g.save_to_meta() == meta.calibration);
    }
  }
  SUBCASE("missing root") {
    DatasetMeta meta = small_meta();
    meta.calibration.erase(root_sensor(Agent::Vehicle));
    CHECK(code_of([&] { CalibrationGraph::load_from_meta(meta); }) == ErrorCode::MissingRoot);
  }
}

TEST_CASE("standalone calibration document") {
  Rng rng(29);
  DatasetMeta meta = realistic_meta();
  for (auto& [id, t] : meta.calibration)
    if (id != root_sensor(id.agent)) t = random_transform(rng);
  const auto g = CalibrationGraph::load_from_meta(meta);
  const auto doc = g.to_json();
  CHECK(doc.at("format") == "fmse-calibration");
  CHECK(doc.at("version") == 1);
  const auto back = CalibrationGraph::from_json(doc);
  REQUIRE(back.size() == g.size());
  for (const auto& id : g.sensors()) CHECK(max_abs_difference(*back.lookup(id), *g.lookup(id)) < 1e-12);
  CHECK_THROWS_AS(CalibrationGraph::from_json(nlohmann::json{{"format", "other"}}), Error);
}
