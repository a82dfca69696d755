#include "adlight/topology.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace adlight {

namespace {

using nlohmann::json;

constexpr const char* kMovementNames[kNumMovements] = {"N",  "NL", "E",  "EL",
                                                       "W",  "WL", "S",  "SL"};

// Entry approach per movement.
constexpr int kApproachOf[kNumMovements] = {0, 0, 1, 1, 3, 3, 2, 2};

// Movement index of the through movement entering from each approach.
constexpr int kThroughOf[4] = {kNorth, kEast, kSouth, kWest};

// Exit approach: through crosses to the opposite leg, a left turn exits the
// clockwise-next leg (right-hand traffic).
int exit_approach(int movement_index) {
  int a = kApproachOf[movement_index];
  bool left = movement_index % 2 == 1;
  return left ? (a + 1) % 4 : (a + 2) % 4;
}

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

const char* movement_name(int index) { return kMovementNames[index]; }

int movement_approach(int movement_index) { return kApproachOf[movement_index]; }

int IntersectionSpec::present_movement_count() const {
  int n = 0;
  for (const auto& m : movements) n += m.present ? 1 : 0;
  return n;
}

int rotate_movement_index(int movement_index, int quarter_turns) {
  int a = (kApproachOf[movement_index] + quarter_turns) % 4;
  return kThroughOf[a] + movement_index % 2;
}

IntersectionSpec rotate(const IntersectionSpec& spec, int quarter_turns) {
  if (quarter_turns < 0 || quarter_turns > 3)
    fail("rotate: quarter_turns must be in {0,1,2,3}");
  IntersectionSpec out = spec;
  for (int p = 0; p < 4; ++p)
    out.lanes_per_road[(p + quarter_turns) % 4] = spec.lanes_per_road[p];
  for (int i = 0; i < kNumMovements; ++i)
    out.movements[rotate_movement_index(i, quarter_turns)] = spec.movements[i];
  out.phases.clear();
  for (const auto& phase : spec.phases) {
    PhaseSpec rotated;
    for (int i : phase.movement_indices)
      rotated.movement_indices.push_back(rotate_movement_index(i, quarter_turns));
    std::sort(rotated.movement_indices.begin(), rotated.movement_indices.end());
    out.phases.push_back(std::move(rotated));
  }
  return out;
}

void validate(const ScenarioSpec& scenario) {
  const IntersectionSpec& s = scenario.intersection;
  if (s.id.empty()) fail("intersection id must be nonempty");
  if (s.roads != 3 && s.roads != 4) fail("roads must be 3 or 4");
  int nonzero_legs = 0;
  for (int l : s.lanes_per_road) {
    if (l < 0) fail("lanes_per_road entries must be nonnegative");
    nonzero_legs += l > 0 ? 1 : 0;
  }
  if (nonzero_legs != s.roads)
    fail("number of nonzero lanes_per_road entries must equal roads");
  if (s.min_green_s < 1) fail("min_green_s must be positive");
  if (s.yellow_s != 3) fail("yellow_s is fixed at 3");
  if (s.detector_length_m != 100.0) fail("detector_length_m is fixed at 100");

  for (int i = 0; i < kNumMovements; ++i) {
    const MovementSlot& m = s.movements[i];
    if (!m.present) {
      if (m.lane_count != 0) fail(std::string("absent movement ") + kMovementNames[i] +
                                  " must have lane_count 0");
      continue;
    }
    if (m.is_straight != (i % 2 == 0))
      fail(std::string("movement ") + kMovementNames[i] +
           ": is_straight must match through/left slot parity");
    if (m.lane_count < 1)
      fail(std::string("present movement ") + kMovementNames[i] +
           " must have a positive lane_count");
    if (s.lanes_per_road[kApproachOf[i]] == 0 ||
        s.lanes_per_road[exit_approach(i)] == 0)
      fail(std::string("movement ") + kMovementNames[i] +
           " requires entry and exit roads that exist");
  }

  if (s.phases.size() < 2) fail("phase list must have at least 2 phases");
  for (std::size_t p = 0; p < s.phases.size(); ++p) {
    const auto& idx = s.phases[p].movement_indices;
    if (idx.empty()) fail("phase " + std::to_string(p) + " is empty");
    std::set<int> seen;
    for (int i : idx) {
      if (i < 0 || i >= kNumMovements)
        fail("phase " + std::to_string(p) + " references movement index " +
             std::to_string(i) + " outside 0..7");
      if (!s.movements[i].present)
        fail("phase " + std::to_string(p) + " references absent movement " +
             kMovementNames[i]);
      if (!seen.insert(i).second)
        fail("phase " + std::to_string(p) + " repeats movement " + kMovementNames[i]);
    }
  }

  for (int i = 0; i < kNumMovements; ++i) {
    if (scenario.arrival_rates[i] < 0) fail("arrival rates must be nonnegative");
    if (scenario.arrival_rates[i] > 0 && !s.movements[i].present)
      fail(std::string("arrival rate set for absent movement ") + kMovementNames[i]);
  }
  if (scenario.duration_s <= 0) fail("duration_s must be positive");
}

ScenarioSpec parse_scenario(const std::string& config_text) {
  json j;
  try {
    j = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario syntax error at byte ") +
                                std::to_string(e.byte) + ": " + e.what());
  }
  ScenarioSpec sc;
  try {
    IntersectionSpec& s = sc.intersection;
    s.id = j.at("id").get<std::string>();
    s.roads = j.at("roads").get<int>();
    auto lanes = j.at("lanes_per_road");
    if (!lanes.is_array() || lanes.size() != 4)
      fail("lanes_per_road must be an array of 4 integers");
    for (int p = 0; p < 4; ++p) s.lanes_per_road[p] = lanes[p].get<int>();
    auto movs = j.at("movements");
    if (!movs.is_array() || movs.size() != kNumMovements)
      fail("movements must be an array of 8 objects");
    for (int i = 0; i < kNumMovements; ++i) {
      s.movements[i].present = movs[i].at("present").get<bool>();
      s.movements[i].is_straight = movs[i].at("is_straight").get<bool>();
      s.movements[i].lane_count = movs[i].at("lane_count").get<int>();
    }
    for (const auto& jp : j.at("phases")) {
      PhaseSpec phase;
      for (const auto& ji : jp) phase.movement_indices.push_back(ji.get<int>());
      std::sort(phase.movement_indices.begin(), phase.movement_indices.end());
      s.phases.push_back(std::move(phase));
    }
    s.min_green_s = j.at("min_green_s").get<int>();
    s.yellow_s = j.value("yellow_s", 3);
    s.detector_length_m = j.value("detector_length_m", 100.0);
    auto rates = j.at("arrival_rates");
    if (!rates.is_array() || rates.size() != kNumMovements)
      fail("arrival_rates must be an array of 8 numbers");
    for (int i = 0; i < kNumMovements; ++i) sc.arrival_rates[i] = rates[i].get<double>();
    sc.duration_s = j.at("duration_s").get<int>();
    sc.seed = j.at("seed").get<std::uint64_t>();
    sc.is_training = j.value("is_training", false);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario schema error: ") + e.what());
  }
  validate(sc);
  return sc;
}

std::string serialize_scenario(const ScenarioSpec& sc) {
  const IntersectionSpec& s = sc.intersection;
  json j;
  j["id"] = s.id;
  j["roads"] = s.roads;
  j["lanes_per_road"] = s.lanes_per_road;
  json movs = json::array();
  for (const auto& m : s.movements)
    movs.push_back({{"present", m.present},
                    {"is_straight", m.is_straight},
                    {"lane_count", m.lane_count}});
  j["movements"] = movs;
  json phases = json::array();
  for (const auto& p : s.phases) phases.push_back(p.movement_indices);
  j["phases"] = phases;
  j["min_green_s"] = s.min_green_s;
  j["yellow_s"] = s.yellow_s;
  j["detector_length_m"] = s.detector_length_m;
  j["arrival_rates"] = sc.arrival_rates;
  j["duration_s"] = sc.duration_s;
  j["seed"] = sc.seed;
  j["is_training"] = sc.is_training;
  return j.dump(2);
}

namespace {

// One left-turn lane per leg; large legs also reserve one uncontrolled
// right-turn lane.
int through_lanes_for(int road_lanes) {
  return road_lanes >= 4 ? road_lanes - 2 : road_lanes - 1;
}

ScenarioSpec make_entry(const std::string& id, std::array<int, 4> lanes,
                        std::vector<std::vector<int>> phases, bool training,
                        double demand) {
  ScenarioSpec sc;
  IntersectionSpec& s = sc.intersection;
  s.id = id;
  s.lanes_per_road = lanes;
  s.roads = 0;
  for (int l : lanes) s.roads += l > 0 ? 1 : 0;
  for (int i = 0; i < kNumMovements; ++i) {
    int entry = kApproachOf[i];
    if (lanes[entry] == 0 || lanes[exit_approach(i)] == 0) continue;
    MovementSlot& m = s.movements[i];
    m.present = true;
    m.is_straight = i % 2 == 0;
    m.lane_count = m.is_straight ? through_lanes_for(lanes[entry]) : 1;
  }
  for (auto& p : phases) {
    PhaseSpec phase;
    std::sort(p.begin(), p.end());
    phase.movement_indices = p;
    s.phases.push_back(std::move(phase));
  }
  for (int i = 0; i < kNumMovements; ++i) {
    if (!s.movements[i].present) continue;
    sc.arrival_rates[i] = demand * (s.movements[i].is_straight ? 0.12 : 0.05);
  }
  sc.duration_s = 3600;
  sc.seed = 1;
  sc.is_training = training;
  validate(sc);
  return sc;
}

}  // namespace

std::vector<ScenarioSpec> builtin_catalog() {
  const std::vector<int> NS{kNorth, kSouth}, NSL{kNorthLeft, kSouthLeft};
  const std::vector<int> EW{kEast, kWest}, EWL{kEastLeft, kWestLeft};
  const std::vector<int> all_ns{kNorth, kNorthLeft, kSouth, kSouthLeft};
  const std::vector<int> all_ew{kEast, kEastLeft, kWest, kWestLeft};

  // Demand levels put each layout in the regime where duration choice matters:
  // two-phase plans and the three-way layouts need heavier flows before their
  // signal timing becomes the bottleneck.
  std::vector<ScenarioSpec> catalog;
  catalog.push_back(make_entry("INT1-1", {5, 4, 4, 4}, {NS, NSL, EW, EWL}, true, 2.2));
  catalog.push_back(make_entry("INT1-2", {5, 4, 4, 4}, {EW, EWL, NS, NSL}, true, 2.2));
  catalog.push_back(make_entry("INT1-3", {5, 4, 4, 4},
                               {NS, NSL, EW, EWL, {kSouth, kSouthLeft}}, true, 2.0));
  catalog.push_back(make_entry("INT2-1", {3, 3, 3, 3}, {NS, NSL, EW, EWL}, true, 2.0));
  catalog.push_back(make_entry("INT2-2", {3, 3, 3, 3}, {NS, EW, NSL, EWL}, true, 2.0));
  catalog.push_back(make_entry("INT2-3", {3, 3, 3, 3}, {all_ns, all_ew}, true, 3.6));
  catalog.push_back(make_entry("INT3-1", {0, 4, 4, 4},
                               {{kEast, kWest}, {kEastLeft}, {kSouthLeft}}, true, 2.5));
  catalog.push_back(make_entry("INT3-2", {0, 4, 4, 4},
                               {{kEast, kWest}, {kSouthLeft}, {kEastLeft}}, true, 2.5));
  catalog.push_back(make_entry("INT4", {5, 4, 5, 4}, {NS, NSL, EW, EWL}, false, 2.2));
  catalog.push_back(make_entry("INT5", {5, 4, 4, 4}, {all_ns, all_ew}, false, 3.0));

  // INT6 is INT3-1 rotated so its missing leg moves from north to west.
  ScenarioSpec int6 = catalog[6];
  int6.intersection = rotate(int6.intersection, 3);
  int6.intersection.id = "INT6";
  std::array<double, kNumMovements> rates{};
  for (int i = 0; i < kNumMovements; ++i)
    rates[rotate_movement_index(i, 3)] = int6.arrival_rates[i];
  int6.arrival_rates = rates;
  int6.is_training = false;
  validate(int6);
  catalog.push_back(std::move(int6));
  return catalog;
}

ScenarioSpec catalog_entry(const std::string& id) {
  for (auto& sc : builtin_catalog())
    if (sc.intersection.id == id) return sc;
  throw std::invalid_argument("unknown catalog intersection: " + id);
}

}  // namespace adlight
