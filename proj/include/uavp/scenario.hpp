#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uavp/rng.hpp"

namespace uavp {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double c, Vec2 v) { return {c * v.x, c * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }

// Grid road topology: a square box of side 2*half_width with three
// longitudinal (constant-x) and three latitudinal (constant-y) roads, and a
// UAV hovering at fixed altitude.
struct AreaSpec {
  double half_width = 120.0;
  std::vector<double> road_offsets_x = {-80.0, 0.0, 80.0};
  std::vector<double> road_offsets_y = {-80.0, 0.0, 80.0};
  double uav_altitude = 50.0;

  void validate() const;
};

// Zones partition the box into 2 rows x 3 columns of equal-area rectangles,
// indexed 1..6 row-major from the bottom-left corner:
//
//   y > 0 :  4 | 5 | 6
//   y <= 0:  1 | 2 | 3
//
// Points exactly on an internal boundary belong to the lower-indexed zone,
// so the center (0, 0) is in zone 2.
inline constexpr int kZoneCount = 6;

enum class Heading { PosX, NegX, PosY, NegY };

struct VehicleState {
  Vec2 position;
  Heading heading = Heading::PosX;
  double speed = 0.0;  // meters per slot
};

// One axis-aligned road piece; a == b is allowed nowhere.
struct RoadSegment {
  Vec2 a;
  Vec2 b;
  double length() const { return norm(b - a); }
  bool vertical() const { return a.x == b.x; }
};

struct MobilityParams {
  double p_straight = 0.5;
  double p_left = 0.25;
  double p_right = 0.25;
  double speed_min_mps = 8.0;   // drawn once per vehicle
  double speed_max_mps = 14.0;
};

struct Resolution {
  std::string label;
  double bits = 0.0;  // image size A_l
};

enum class SpawnDistribution { Even, Biased };

// Full experiment configuration. Defaults reproduce the reference setup:
// V=200, S0=150, P=30 dBm, W=50 MHz, N0=-174 dBm/Hz, T_th=3 s, eps=1e-3,
// d_th=20 m, N=3e4, nu=5e-4, K=81, delta=5e-6, four resolution levels,
// 33 ms slots. Power quantities are stored linear (watts); dBm/dB values
// are converted once at config load.
struct ExperimentConfig {
  int schema_version = 1;

  int vue_count = 200;            // V
  int slots_per_block = 150;      // S0
  double slot_length = 0.033;     // seconds
  double tx_power = 1.0;          // P, watts (30 dBm)
  double bandwidth = 50e6;        // W, hertz
  double noise_psd = 3.9810717055349726e-21;  // N0, W/Hz (-174 dBm/Hz)
  double delay_threshold = 3.0;   // T_th, seconds
  double epsilon = 1e-3;
  double displacement_max = 20.0; // d_th, meters
  int samples_per_position = 30000;  // N
  double fit_rate = 5e-4;         // nu
  double placement_rate = 5e-6;   // delta
  int training_positions = 81;    // K, must be a perfect square
  std::vector<Resolution> resolutions = {
      {"240p", 2.5e6}, {"360p", 5.5e6}, {"480p", 9.8e6}, {"720p", 22e6}};
  Vec2 origin;                    // (x0, y0)
  std::uint64_t master_seed = 1;

  AreaSpec area;
  MobilityParams mobility;
  double channel_phi = 3.24e-4;
  double channel_theta = std::atan(24.0 * std::sqrt(2.0) / 5.0);  // radians
  double rician_kappa = std::pow(10.0, 1.2);                      // 12 dB

  std::vector<double> biased_zone_weights = {0.4, 0.05, 0.05, 0.05, 0.05, 0.4};
  int evaluation_blocks = 2000;

  void validate() const;

  double min_image_bits() const { return resolutions.front().bits; }
  // a_i = A1 * T_th / V, shared by every VUE.
  double payload_ratio() const {
    return min_image_bits() * delay_threshold / vue_count;
  }
};

// Key/value config file (one `key = value` per line, `#` comments).
// `schema_version` is mandatory and must match.
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);
// Canonical text form; also the input of config_hash().
std::string config_to_text(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Reduced preset for laptop-scale runs: N=3e3, K=25 (5x5 grid), V=50,
// 2e3 evaluation blocks; placement origin at the center with d_th=120 m so
// the solver may roam the whole area.
ExperimentConfig desk_config();

// Zone lookup; total over the bounding box (off-road points use the same
// rectangular partition). Throws if the point is outside the box.
int zone_of(Vec2 position, const AreaSpec& area);

// All roads as segments, and their restriction to one zone.
std::vector<RoadSegment> road_segments(const AreaSpec& area);
std::vector<RoadSegment> segments_in_zone(const AreaSpec& area, int zone);

// Uniform point (by length) on a set of segments, with the segment's axis
// reported so a heading can be assigned.
Vec2 uniform_road_point(const std::vector<RoadSegment>& segs, RngStream& rng,
                        bool* vertical = nullptr);

std::vector<VehicleState> spawn_vehicles(const ExperimentConfig& cfg,
                                         SpawnDistribution distribution,
                                         RngStream& rng);
// Spawn one vehicle on the roads of a given zone (used per tracked block).
VehicleState spawn_in_zone(const ExperimentConfig& cfg, int zone, RngStream& rng);

// Advance one slot along the road graph: straight/left/right at
// intersections, U-turn at the area boundary. Output is always on-road.
VehicleState step_mobility(const VehicleState& state, const AreaSpec& area,
                           const MobilityParams& mobility, RngStream& rng);

}  // namespace uavp
