#include <stdexcept>
#include <cmath>
#include <random>

#include "adlight/features.hpp"
#include "doctest.h"

using namespace adlight;

namespace {

ScenarioSpec quiet(const char* id) {
  ScenarioSpec sc = catalog_entry(id);
  sc.arrival_rates = {};
  return sc;
}

}  // namespace

TEST_CASE("absent movements map to all-zero rows") {
  SimWorld world(quiet("INT3-1"), 1);
  for (int t = 0; t < 20; ++t) {
    if (world.phase_complete()) world.begin_phase(5);
    world.step();
  }
  StateMatrix state = assemble_state(world, 5);
  const MovementFeature zero{};
  CHECK(state.rows[kNorth] == zero);
  CHECK(state.rows[kNorthLeft] == zero);
  CHECK(state.rows[kSouth] == zero);
  CHECK(state.rows[kWestLeft] == zero);
  CHECK(state.rows[kEast] != zero);  // present, green in phase 0
}

TEST_CASE("feature row composition for a 3-lane through movement, 12 s green") {
  // INT1-1 north road has 5 lanes -> through keeps 3. Empty network, phase 0
  // extended so N has been green 12 s and past minimum green.
  SimWorld world(quiet("INT1-1"), 1);
  world.extend_phase(10);
  for (int t = 0; t < 12; ++t) world.step();
  StateMatrix state = assemble_state(world, 12);
  const MovementFeature& row = state.rows[kNorth];
  CHECK(row[0] == 0.0);  // flow
  CHECK(row[1] == 0.0);  // occ mean
  CHECK(row[2] == 0.0);  // occ max
  CHECK(row[3] == 1.0);  // is straight
  CHECK(row[4] == doctest::Approx(3.0 / 5.0));
  CHECK(row[5] == doctest::Approx(12.0 / 70.0));
  CHECK(row[6] == 1.0);  // min green satisfied
  CHECK(row[7] == 1.0);  // green

  // a red movement in the same snapshot
  const MovementFeature& red_row = state.rows[kEast];
  CHECK(red_row[7] == 0.0);
  CHECK(red_row[6] == 0.0);
  CHECK(red_row[3] == 1.0);
}

TEST_CASE("raw reward is the negative total queue") {
  SimWorld world(quiet("INT1-1"), 1);
  for (int k = 0; k < 3; ++k) world.spawn_vehicle(kEast, 0, k * kJamSpacingM);
  for (int k = 0; k < 2; ++k) world.spawn_vehicle(kWestLeft, 0, k * kJamSpacingM);
  for (int t = 0; t < 3; ++t) world.step();  // both movements are red in phase 0
  CHECK(raw_reward(world) == doctest::Approx(-5.0));
}

TEST_CASE("normalizer first samples hit the clip bound") {
  RewardNormalizer norm;
  CHECK(norm.normalize(-3.0) == doctest::Approx(-10.0));  // empty history
  // history {-3}: sigma 0, so -5 is clipped at -10 again
  CHECK(norm.normalize(-5.0) == doctest::Approx(-10.0));
}

TEST_CASE("normalizer centers against previously seen rewards") {
  RewardNormalizer norm;
  norm.normalize(-2.0);
  norm.normalize(-4.0);
  // history {-2,-4}: mean -3, population sigma 1 -> (-3 - -3)/(1+eps) = 0
  CHECK(norm.normalize(-3.0) == doctest::Approx(0.0));
  CHECK(norm.count() == 3);
  CHECK(norm.mean() == doctest::Approx(-3.0));
}

TEST_CASE("normalizer statistics match a naive recomputation") {
  RewardNormalizer norm;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> dist(-20.0, 6.0);
  std::vector<double> history;
  for (int i = 0; i < 500; ++i) {
    double raw = dist(rng);
    double expected;
    if (history.empty()) {
      expected = std::clamp(raw / RewardNormalizer::kEpsilon, -10.0, 10.0);
    } else {
      double mean = 0.0;
      for (double h : history) mean += h;
      mean /= history.size();
      double var = 0.0;
      for (double h : history) var += (h - mean) * (h - mean);
      var /= history.size();
      expected = std::clamp((raw - mean) / (std::sqrt(var) + RewardNormalizer::kEpsilon),
                            -10.0, 10.0);
    }
    CHECK(norm.normalize(raw) == doctest::Approx(expected).epsilon(1e-9));
    history.push_back(raw);
  }
}

TEST_CASE("movement shuffle permutes rows and rejects non-bijections") {
  StateMatrix state;
  for (int r = 0; r < kNumMovements; ++r)
    for (int c = 0; c < kFeaturesPerMovement; ++c)
      state.rows[r][c] = r * 10.0 + c;

  CHECK(movement_shuffle(state, identity_permutation()) == state);

  const Permutation perm = {2, 6, 0, 7, 1, 3, 5, 4};
  StateMatrix shuffled = movement_shuffle(state, perm);
  for (int r = 0; r < kNumMovements; ++r) CHECK(shuffled.rows[r] == state.rows[perm[r]]);

  // inverting the permutation restores the original
  Permutation inverse{};
  for (int r = 0; r < kNumMovements; ++r) inverse[perm[r]] = r;
  CHECK(movement_shuffle(shuffled, inverse) == state);

  CHECK_THROWS_AS(movement_shuffle(state, Permutation{0, 0, 1, 2, 3, 4, 5, 6}),
                  std::invalid_argument);
  CHECK_THROWS_AS(movement_shuffle(state, Permutation{0, 1, 2, 3, 4, 5, 6, 9}),
                  std::invalid_argument);
}

TEST_CASE("rotating an intersection permutes the state rows accordingly") {
  for (int q = 0; q < 4; ++q) {
    ScenarioSpec base = quiet("INT3-1");
    ScenarioSpec turned = base;
    turned.intersection = rotate(base.intersection, q);
    SimWorld world_a(base, 1);
    SimWorld world_b(turned, 1);
    StateMatrix sa = assemble_state(world_a, 5);
    StateMatrix sb = assemble_state(world_b, 5);
    for (int i = 0; i < kNumMovements; ++i)
      CHECK(sb.rows[rotate_movement_index(i, q)] == sa.rows[i]);
  }
}
