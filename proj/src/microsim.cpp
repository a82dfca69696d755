#include "adlight/microsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adlight {

void DetectorBank::record(int movement, int crossings, double occupancy, int queue) {
  if (movement == 0) {
    // first movement of the step advances the ring
    head_ = (head_ + 1) % kCapacity;
    samples_ = std::min(samples_ + 1, kCapacity);
  }
  int slot = (head_ + kCapacity - 1) % kCapacity;
  rings_[movement].crossings[slot] = crossings;
  rings_[movement].occupancy[slot] = occupancy;
  queue_[movement] = queue;
}

int DetectorBank::window_available(int clock_s) const {
  return std::min({samples_, clock_s, kCapacity});
}

int DetectorBank::crossings(int movement, int window_s) const {
  int w = std::min(window_s, samples_);
  int total = 0;
  for (int k = 1; k <= w; ++k)
    total += rings_[movement].crossings[(head_ + kCapacity - k) % kCapacity];
  return total;
}

double DetectorBank::occ_mean(int movement, int window_s) const {
  int w = std::min(window_s, samples_);
  if (w == 0) return 0.0;
  double total = 0.0;
  for (int k = 1; k <= w; ++k)
    total += rings_[movement].occupancy[(head_ + kCapacity - k) % kCapacity];
  return total / w;
}

double DetectorBank::occ_max(int movement, int window_s) const {
  int w = std::min(window_s, samples_);
  double best = 0.0;
  for (int k = 1; k <= w; ++k)
    best = std::max(best, rings_[movement].occupancy[(head_ + kCapacity - k) % kCapacity]);
  return best;
}

SimWorld::SimWorld(const ScenarioSpec& scenario)
    : SimWorld(scenario, scenario.seed) {}

SimWorld::SimWorld(const ScenarioSpec& scenario, std::uint64_t seed)
    : scenario_(scenario), rng_(seed) {
  validate(scenario_);
  for (int m = 0; m < kNumMovements; ++m)
    lanes_[m].resize(spec().movements[m].present ? spec().movements[m].lane_count : 0);
  activate_phase(0, spec().min_green_s);
}

bool SimWorld::movement_in_phase(int movement, int phase) const {
  const auto& idx = spec().phases[phase].movement_indices;
  return std::find(idx.begin(), idx.end(), movement) != idx.end();
}

void SimWorld::apply_colors_for_active_phase() {
  for (int m = 0; m < kNumMovements; ++m) {
    SignalColor c = movement_in_phase(m, signal_.phase_index) ? SignalColor::Green
                                                              : SignalColor::Red;
    if (signal_.color[m] != c) {
      signal_.color[m] = c;
      signal_.color_elapsed_s[m] = 0;
    }
  }
}

void SimWorld::activate_phase(int phase, int duration_s) {
  signal_.phase_index = phase;
  signal_.in_yellow = false;
  signal_.yellow_remaining_s = 0;
  signal_.green_elapsed_s = 0;
  signal_.green_duration_s = duration_s;
  apply_colors_for_active_phase();
}

bool SimWorld::phase_complete() const {
  return !signal_.in_yellow && signal_.green_elapsed_s >= signal_.green_duration_s;
}

void SimWorld::set_allowed_durations(std::vector<int> durations) {
  allowed_durations_ = std::move(durations);
}

void SimWorld::begin_phase(int duration_s) {
  begin_phase_at((signal_.phase_index + 1) % static_cast<int>(spec().phases.size()),
                 duration_s);
}

void SimWorld::begin_phase_at(int phase, int duration_s) {
  if (phase < 0 || phase >= static_cast<int>(spec().phases.size()))
    throw std::invalid_argument("begin_phase_at: phase index out of range");
  if (!phase_complete())
    throw std::logic_error("begin_phase: previous phase not complete");
  if (duration_s < 1) throw std::invalid_argument("phase duration must be positive");
  if (!allowed_durations_.empty() &&
      std::find(allowed_durations_.begin(), allowed_durations_.end(), duration_s) ==
          allowed_durations_.end())
    throw std::invalid_argument("phase duration " + std::to_string(duration_s) +
                                " not in the configured action set");

  bool needs_yellow = false;
  for (int m = 0; m < kNumMovements; ++m)
    if (signal_.color[m] == SignalColor::Green && !movement_in_phase(m, phase))
      needs_yellow = true;

  if (!needs_yellow) {
    activate_phase(phase, duration_s);
    return;
  }
  signal_.in_yellow = true;
  signal_.yellow_remaining_s = spec().yellow_s;
  signal_.pending_phase = phase;
  signal_.pending_duration_s = duration_s;
  for (int m = 0; m < kNumMovements; ++m) {
    if (signal_.color[m] == SignalColor::Green && !movement_in_phase(m, phase)) {
      signal_.color[m] = SignalColor::Yellow;
      signal_.color_elapsed_s[m] = 0;
    }
  }
}

void SimWorld::extend_phase(int extra_s) {
  if (extra_s < 1) throw std::invalid_argument("extension must be positive");
  if (signal_.in_yellow) throw std::logic_error("cannot extend during yellow");
  signal_.green_duration_s += extra_s;
}

void SimWorld::spawn_vehicle(int movement, int lane, double position_m) {
  if (!spec().movements[movement].present)
    throw std::invalid_argument("spawn on absent movement");
  Vehicle v;
  v.id = next_vehicle_id_++;
  v.movement = movement;
  v.position_m = position_m;
  v.speed_mps = 0.0;
  v.spawned_at_s = clock_s_;
  lanes_[movement][lane].vehicles.push_back(v);
  ++spawned_;
}

void SimWorld::insert_arrivals() {
  for (int m = 0; m < kNumMovements; ++m) {
    double rate = scenario_.arrival_rates[m];
    if (rate <= 0.0 || lanes_[m].empty()) continue;
    std::poisson_distribution<int> poisson(rate);
    int count = poisson(rng_);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(lanes_[m].size()) - 1);
    for (int k = 0; k < count; ++k) ++lanes_[m][pick(rng_)].backlog;
  }
  for (int m = 0; m < kNumMovements; ++m) {
    for (auto& lane : lanes_[m]) {
      while (lane.backlog > 0) {
        if (!lane.vehicles.empty() &&
            lane.vehicles.back().position_m + kJamSpacingM > kApproachLengthM)
          break;  // no room, hold outside the network
        Vehicle v;
        v.id = next_vehicle_id_++;
        v.movement = m;
        v.position_m = kApproachLengthM;
        v.speed_mps = kFreeSpeedMps;
        v.spawned_at_s = clock_s_;
        lane.vehicles.push_back(v);
        ++spawned_;
        --lane.backlog;
      }
    }
  }
}

void SimWorld::move_vehicles() {
  crossings_this_step_.fill(0);
  for (int m = 0; m < kNumMovements; ++m) {
    bool green = signal_.color[m] == SignalColor::Green;
    for (auto& lane : lanes_[m]) {
      lane.cooldown_s = std::max(0, lane.cooldown_s - 1);
      if (green && lane.cooldown_s == 0 && !lane.vehicles.empty() &&
          lane.vehicles.front().position_m <= 1e-9) {
        lane.vehicles.front().departed_at_s = clock_s_;
        lane.vehicles.pop_front();
        ++departed_;
        ++crossings_this_step_[m];
        ++total_crossings_[m];
        lane.cooldown_s = kSaturationHeadwayS;
      }
      double leader_pos = -kJamSpacingM;  // sentinel: first vehicle targets 0
      bool first = true;
      for (auto& v : lane.vehicles) {
        double limit = first ? 0.0 : leader_pos + kJamSpacingM;
        double next = std::max(limit, v.position_m - kFreeSpeedMps);
        v.speed_mps = v.position_m - next;
        v.position_m = next;
        if (v.speed_mps <= kStoppedSpeedMps) {
          v.waiting_s += 1.0;
          cumulative_waiting_s_ += 1.0;
        }
        leader_pos = v.position_m;
        first = false;
      }
    }
  }
}

void SimWorld::sample_detectors() {
  for (int m = 0; m < kNumMovements; ++m) {
    int in_zone = 0;
    int queue = 0;
    for (const auto& lane : lanes_[m]) {
      for (const auto& v : lane.vehicles) {
        if (v.position_m < spec().detector_length_m) {
          ++in_zone;
          if (v.speed_mps <= kStoppedSpeedMps) ++queue;
        }
      }
    }
    double occupancy =
        std::min(1.0, in_zone * kJamSpacingM / spec().detector_length_m);
    detectors_.record(m, crossings_this_step_[m], occupancy, queue);
  }
}

void SimWorld::advance_signal() {
  for (int m = 0; m < kNumMovements; ++m) ++signal_.color_elapsed_s[m];
  if (signal_.in_yellow) {
    if (--signal_.yellow_remaining_s == 0)
      activate_phase(signal_.pending_phase, signal_.pending_duration_s);
  } else {
    ++signal_.green_elapsed_s;
  }
}

StepReport SimWorld::step() {
  if (finished()) throw std::logic_error("step: simulation already finished");
  std::int64_t spawned_before = spawned_;
  std::int64_t departed_before = departed_;
  insert_arrivals();
  move_vehicles();
  sample_detectors();
  advance_signal();
  ++clock_s_;
  StepReport report;
  report.clock_s = clock_s_;
  report.spawned = static_cast<int>(spawned_ - spawned_before);
  report.departed = static_cast<int>(departed_ - departed_before);
  return report;
}

RawObservation SimWorld::read_observation(int movement, int window_s) const {
  if (window_s < 1) throw std::invalid_argument("observation window must be >= 1");
  RawObservation obs;
  const MovementSlot& slot = spec().movements[movement];
  if (!slot.present) return obs;
  int w = std::min(window_s, detectors_.window_available(clock_s_));
  if (w > 0) {
    obs.flow = static_cast<double>(detectors_.crossings(movement, w)) / w /
               slot.lane_count;
    obs.occ_mean = detectors_.occ_mean(movement, w);
    obs.occ_max = detectors_.occ_max(movement, w);
  }
  obs.queue = detectors_.queue(movement);
  return obs;
}

std::int64_t SimWorld::in_network() const {
  std::int64_t n = 0;
  for (const auto& lanes : lanes_)
    for (const auto& lane : lanes) n += static_cast<std::int64_t>(lane.vehicles.size());
  return n;
}

EpisodeMetrics SimWorld::metrics() const {
  EpisodeMetrics m;
  m.vehicles = spawned_;
  m.throughput = departed_;
  m.avg_waiting_s = spawned_ > 0 ? cumulative_waiting_s_ / spawned_ : 0.0;
  return m;
}

}  // namespace adlight
