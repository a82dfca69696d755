#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <vector>

#include "adlight/topology.hpp"

namespace adlight {

// Kinematic constants shared by the simulator, the detectors and the
// Webster baseline.
inline constexpr double kFreeSpeedMps = 13.89;       // 50 km/h
inline constexpr double kVehicleLengthM = 5.0;
inline constexpr double kJamGapM = 2.5;
inline constexpr double kJamSpacingM = kVehicleLengthM + kJamGapM;
inline constexpr int kSaturationHeadwayS = 2;        // per vehicle per lane
inline constexpr double kSaturationFlowVphpl = 1800.0;
inline constexpr double kApproachLengthM = 300.0;
inline constexpr double kStoppedSpeedMps = 0.1;      // waiting threshold

enum class SignalColor { Red, Yellow, Green };

struct Vehicle {
  std::int64_t id = 0;
  int movement = 0;
  double position_m = 0.0;  // distance to the stop line
  double speed_mps = 0.0;
  double waiting_s = 0.0;
  int spawned_at_s = 0;
  int departed_at_s = -1;
};

struct SignalState {
  int phase_index = 0;
  bool in_yellow = false;
  int yellow_remaining_s = 0;
  int pending_phase = 0;
  int pending_duration_s = 0;
  int green_elapsed_s = 0;
  int green_duration_s = 0;
  std::array<SignalColor, kNumMovements> color{};
  std::array<int, kNumMovements> color_elapsed_s{};
};

struct RawObservation {
  double flow = 0.0;      // veh/s/lane over the window
  double occ_mean = 0.0;
  double occ_max = 0.0;
  int queue = 0;          // stopped vehicles currently in the detector zone
};

struct EpisodeMetrics {
  double avg_waiting_s = 0.0;
  std::int64_t vehicles = 0;    // entered the network
  std::int64_t throughput = 0;  // crossed the stop line
};

struct StepReport {
  int clock_s = 0;
  int spawned = 0;
  int departed = 0;
};

// Per-second detector streams, one ring per movement.
class DetectorBank {
 public:
  static constexpr int kCapacity = 128;

  void record(int movement, int crossings, double occupancy, int queue);
  int window_available(int clock_s) const;
  int crossings(int movement, int window_s) const;
  double occ_mean(int movement, int window_s) const;
  double occ_max(int movement, int window_s) const;
  int queue(int movement) const { return queue_[movement]; }

 private:
  struct Ring {
    std::array<int, kCapacity> crossings{};
    std::array<double, kCapacity> occupancy{};
  };
  std::array<Ring, kNumMovements> rings_{};
  std::array<int, kNumMovements> queue_{};
  int samples_ = 0;
  int head_ = 0;  // next write slot
};

// Deterministic 1 s resolution point-queue simulation of one intersection.
// Construction activates phase 0 for min_green_s; the controller then calls
// begin_phase (or begin_phase_at / extend_phase) whenever phase_complete().
class SimWorld {
 public:
  explicit SimWorld(const ScenarioSpec& scenario);
  SimWorld(const ScenarioSpec& scenario, std::uint64_t seed);

  StepReport step();

  void begin_phase(int duration_s);
  void begin_phase_at(int phase, int duration_s);
  void extend_phase(int extra_s);
  bool phase_complete() const;
  bool finished() const { return clock_s_ >= scenario_.duration_s; }

  RawObservation read_observation(int movement, int window_s) const;
  EpisodeMetrics metrics() const;

  const ScenarioSpec& scenario() const { return scenario_; }
  const IntersectionSpec& spec() const { return scenario_.intersection; }
  const SignalState& signal() const { return signal_; }
  int clock_s() const { return clock_s_; }
  std::int64_t spawned() const { return spawned_; }
  std::int64_t departed() const { return departed_; }
  std::int64_t in_network() const;
  int queue_length(int movement) const { return detectors_.queue(movement); }
  std::int64_t total_crossings(int movement) const { return total_crossings_[movement]; }

  // Durations begin_phase will accept; empty = any positive duration.
  void set_allowed_durations(std::vector<int> durations);

  // Places an already-stopped vehicle on a lane (test and scenario setup).
  void spawn_vehicle(int movement, int lane, double position_m);

 private:
  struct Lane {
    std::deque<Vehicle> vehicles;  // front = closest to stop line
    int backlog = 0;               // arrivals waiting for room to enter
    int cooldown_s = 0;            // saturation headway timer
  };

  void activate_phase(int phase, int duration_s);
  void apply_colors_for_active_phase();
  bool movement_in_phase(int movement, int phase) const;
  void insert_arrivals();
  void move_vehicles();
  void sample_detectors();
  void advance_signal();

  ScenarioSpec scenario_;
  std::mt19937_64 rng_;
  int clock_s_ = 0;
  SignalState signal_;
  std::array<std::vector<Lane>, kNumMovements> lanes_;
  DetectorBank detectors_;
  std::array<int, kNumMovements> crossings_this_step_{};
  std::array<std::int64_t, kNumMovements> total_crossings_{};
  std::vector<int> allowed_durations_;
  std::int64_t next_vehicle_id_ = 0;
  std::int64_t spawned_ = 0;
  std::int64_t departed_ = 0;
  double cumulative_waiting_s_ = 0.0;
};

}  // namespace adlight
