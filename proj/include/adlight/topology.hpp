#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace adlight {

// Canonical movement order. A movement is named after the approach road it
// enters from: N = through from the north road, NL = left turn from the
// north road, and so on. Even indices are through movements, odd are lefts.
// Right turns are uncontrolled and never modeled.
enum Movement : int {
  kNorth = 0,
  kNorthLeft = 1,
  kEast = 2,
  kEastLeft = 3,
  kWest = 4,
  kWestLeft = 5,
  kSouth = 6,
  kSouthLeft = 7,
};

inline constexpr int kNumMovements = 8;

const char* movement_name(int index);

// Approach roads in clockwise order starting from north; matches the
// lanes_per_road tuple in scenario files.
enum Approach : int { kApproachN = 0, kApproachE = 1, kApproachS = 2, kApproachW = 3 };

// Approach road a movement enters from.
int movement_approach(int movement_index);

struct MovementSlot {
  bool present = false;
  bool is_straight = false;
  int lane_count = 0;
};

struct PhaseSpec {
  std::vector<int> movement_indices;  // sorted, unique, each 0..7
};

struct IntersectionSpec {
  std::string id;
  int roads = 4;                          // 3 or 4
  std::array<int, 4> lanes_per_road{};    // clockwise from north; 0 = missing leg
  std::array<MovementSlot, kNumMovements> movements{};
  std::vector<PhaseSpec> phases;          // cyclic execution order
  int min_green_s = 5;
  int yellow_s = 3;
  double detector_length_m = 100.0;

  int present_movement_count() const;
};

struct ScenarioSpec {
  IntersectionSpec intersection;
  std::array<double, kNumMovements> arrival_rates{};  // veh/s per movement
  int duration_s = 3600;
  std::uint64_t seed = 0;
  bool is_training = false;  // catalog split marker
};

// Validates all IntersectionSpec/ScenarioSpec invariants; throws
// std::invalid_argument naming the violated one.
void validate(const ScenarioSpec& scenario);

ScenarioSpec parse_scenario(const std::string& config_text);
std::string serialize_scenario(const ScenarioSpec& scenario);

// The 11 built-in intersections: INT1-1..INT3-2 (training) and
// INT4/INT5/INT6 (test), with default arrival rates and episode length.
std::vector<ScenarioSpec> builtin_catalog();
ScenarioSpec catalog_entry(const std::string& id);

// Remaps roads, movement slots, arrival rates and phase contents by
// 90-degree clockwise quarter turns (N->E->S->W).
IntersectionSpec rotate(const IntersectionSpec& spec, int quarter_turns);

// Movement index remap used by rotate: where movement i ends up after the
// given number of quarter turns.
int rotate_movement_index(int movement_index, int quarter_turns);

}  // namespace adlight
