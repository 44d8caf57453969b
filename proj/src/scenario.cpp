#include "uavp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace uavp {

namespace {

constexpr double kEventEps = 1e-9;  // "strictly ahead" threshold, meters

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& vs) {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ",";
    out += fmt(vs[i]);
  }
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

bool heading_vertical(Heading h) {
  return h == Heading::PosY || h == Heading::NegY;
}

Heading reverse(Heading h) {
  switch (h) {
    case Heading::PosX: return Heading::NegX;
    case Heading::NegX: return Heading::PosX;
    case Heading::PosY: return Heading::NegY;
    default: return Heading::PosY;
  }
}

Heading turn_left(Heading h) {
  switch (h) {
    case Heading::PosX: return Heading::PosY;
    case Heading::PosY: return Heading::NegX;
    case Heading::NegX: return Heading::NegY;
    default: return Heading::PosX;
  }
}

Heading turn_right(Heading h) { return reverse(turn_left(h)); }

double heading_sign(Heading h) {
  return (h == Heading::PosX || h == Heading::PosY) ? 1.0 : -1.0;
}

}  // namespace

void AreaSpec::validate() const {
  if (half_width <= 0.0) throw std::invalid_argument("area: half_width must be > 0");
  if (uav_altitude <= 0.0) throw std::invalid_argument("area: uav_altitude must be > 0");
  if (road_offsets_x.empty() || road_offsets_y.empty())
    throw std::invalid_argument("area: empty road set");
  for (double v : road_offsets_x)
    if (v < -half_width || v > half_width)
      throw std::invalid_argument("area: road offset outside box");
  for (double v : road_offsets_y)
    if (v < -half_width || v > half_width)
      throw std::invalid_argument("area: road offset outside box");
}

void ExperimentConfig::validate() const {
  area.validate();
  if (vue_count < 1) throw std::invalid_argument("config: V must be >= 1");
  if (slots_per_block < 1) throw std::invalid_argument("config: S0 must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("config: epsilon must be in (0,1)");
  if (resolutions.empty()) throw std::invalid_argument("config: empty resolution list");
  for (std::size_t i = 1; i < resolutions.size(); ++i)
    if (resolutions[i].bits <= resolutions[i - 1].bits)
      throw std::invalid_argument("config: resolutions must be strictly increasing");
  if (slot_length <= 0.0 || tx_power <= 0.0 || bandwidth <= 0.0 || noise_psd <= 0.0)
    throw std::invalid_argument("config: nonpositive physical constant");
  if (delay_threshold <= 0.0) throw std::invalid_argument("config: T_th must be > 0");
  if (samples_per_position < 1) throw std::invalid_argument("config: N must be >= 1");
  int side = static_cast<int>(std::lround(std::sqrt(double(training_positions))));
  if (side * side != training_positions)
    throw std::invalid_argument("config: K must be a perfect square");
  if (biased_zone_weights.size() != kZoneCount)
    throw std::invalid_argument("config: biased weights must have one entry per zone");
  if (channel_phi <= 0.0 || channel_theta <= 0.0 || channel_theta >= M_PI / 2 ||
      rician_kappa < 0.0)
    throw std::invalid_argument("config: channel constants out of range");
}

namespace {

// Boundary coordinates go to the lower-indexed cell: count internal
// boundaries strictly below the coordinate.
int col_of(double x, double hw) {
  int col = 0;
  if (-hw / 3.0 < x) ++col;
  if (hw / 3.0 < x) ++col;
  return col;
}

int row_of(double y) { return (0.0 < y) ? 1 : 0; }

}  // namespace

int zone_of(Vec2 p, const AreaSpec& area) {
  const double hw = area.half_width;
  if (p.x < -hw || p.x > hw || p.y < -hw || p.y > hw)
    throw std::out_of_range("zone_of: position outside area");
  return row_of(p.y) * 3 + col_of(p.x, hw) + 1;
}

std::vector<RoadSegment> road_segments(const AreaSpec& area) {
  std::vector<RoadSegment> segs;
  const double hw = area.half_width;
  for (double x : area.road_offsets_x)
    segs.push_back({{x, -hw}, {x, hw}});
  for (double y : area.road_offsets_y)
    segs.push_back({{-hw, y}, {hw, y}});
  return segs;
}

std::vector<RoadSegment> segments_in_zone(const AreaSpec& area, int zone) {
  if (zone < 1 || zone > kZoneCount)
    throw std::invalid_argument("segments_in_zone: zone out of range");
  const double hw = area.half_width;
  const int col = (zone - 1) % 3;
  const int row = (zone - 1) / 3;
  const double x_lo = -hw + col * (2.0 * hw / 3.0);
  const double x_hi = x_lo + 2.0 * hw / 3.0;
  const double y_lo = -hw + row * hw;
  const double y_hi = y_lo + hw;
  // Membership of a road lying exactly on a zone boundary follows the same
  // lower-index tie-break as zone_of.
  std::vector<RoadSegment> out;
  for (const RoadSegment& s : road_segments(area)) {
    if (s.vertical()) {
      if (col_of(s.a.x, hw) != col) continue;
      double lo = std::max(std::min(s.a.y, s.b.y), y_lo);
      double hi = std::min(std::max(s.a.y, s.b.y), y_hi);
      if (hi > lo) out.push_back({{s.a.x, lo}, {s.a.x, hi}});
    } else {
      if (row_of(s.a.y) != row) continue;
      double lo = std::max(std::min(s.a.x, s.b.x), x_lo);
      double hi = std::min(std::max(s.a.x, s.b.x), x_hi);
      if (hi > lo) out.push_back({{lo, s.a.y}, {hi, s.a.y}});
    }
  }
  return out;
}

Vec2 uniform_road_point(const std::vector<RoadSegment>& segs, RngStream& rng,
                        bool* vertical) {
  if (segs.empty()) throw std::runtime_error("spawn: empty road set");
  double total = 0.0;
  for (const RoadSegment& s : segs) total += s.length();
  if (total <= 0.0) throw std::runtime_error("spawn: zero-length road set");
  double u = rng.uniform() * total;
  for (const RoadSegment& s : segs) {
    const double len = s.length();
    if (u <= len || &s == &segs.back()) {
      const double t = std::clamp(u / len, 0.0, 1.0);
      if (vertical) *vertical = s.vertical();
      return s.a + t * (s.b - s.a);
    }
    u -= len;
  }
  if (vertical) *vertical = segs.back().vertical();
  return segs.back().b;
}

namespace {

VehicleState spawn_on(const std::vector<RoadSegment>& segs,
                      const ExperimentConfig& cfg, RngStream& rng) {
  bool vertical = false;
  VehicleState v;
  v.position = uniform_road_point(segs, rng, &vertical);
  const bool forward = rng.uniform() < 0.5;
  v.heading = vertical ? (forward ? Heading::PosY : Heading::NegY)
                       : (forward ? Heading::PosX : Heading::NegX);
  v.speed = rng.uniform(cfg.mobility.speed_min_mps, cfg.mobility.speed_max_mps) *
            cfg.slot_length;
  return v;
}

}  // namespace

std::vector<VehicleState> spawn_vehicles(const ExperimentConfig& cfg,
                                         SpawnDistribution distribution,
                                         RngStream& rng) {
  cfg.validate();
  std::vector<double> weights(kZoneCount, 1.0);
  if (distribution == SpawnDistribution::Biased) weights = cfg.biased_zone_weights;
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("spawn: negative zone weight");
    wsum += w;
  }
  if (wsum <= 0.0) throw std::invalid_argument("spawn: zone weights sum to zero");

  std::array<std::vector<RoadSegment>, kZoneCount> zone_segs;
  for (int z = 1; z <= kZoneCount; ++z)
    zone_segs[z - 1] = segments_in_zone(cfg.area, z);

  std::vector<VehicleState> out;
  out.reserve(cfg.vue_count);
  for (int i = 0; i < cfg.vue_count; ++i) {
    const std::size_t z = rng.weighted_index(weights);
    out.push_back(spawn_on(zone_segs[z], cfg, rng));
  }
  return out;
}

VehicleState spawn_in_zone(const ExperimentConfig& cfg, int zone, RngStream& rng) {
  return spawn_on(segments_in_zone(cfg.area, zone), cfg, rng);
}

VehicleState step_mobility(const VehicleState& state, const AreaSpec& area,
                           const MobilityParams& mobility, RngStream& rng) {
  VehicleState v = state;
  const double hw = area.half_width;
  double remaining = v.speed;

  // Walk event-to-event: the next intersection strictly ahead or the area
  // boundary, whichever comes first.
  for (int guard = 0; remaining > 0.0 && guard < 1000; ++guard) {
    const bool vert = heading_vertical(v.heading);
    const double sign = heading_sign(v.heading);
    const double along = vert ? v.position.y : v.position.x;
    const std::vector<double>& cross_offsets =
        vert ? area.road_offsets_y : area.road_offsets_x;

    double dist_boundary = sign > 0 ? hw - along : along + hw;
    double dist_intersection = std::numeric_limits<double>::infinity();
    double intersection_at = 0.0;
    for (double c : cross_offsets) {
      const double d = sign * (c - along);
      if (d > kEventEps && d < dist_intersection) {
        dist_intersection = d;
        intersection_at = c;
      }
    }

    if (dist_boundary <= kEventEps) {
      v.heading = reverse(v.heading);  // U-turn; re-evaluate direction
      continue;
    }

    const double step = std::min({remaining, dist_boundary, dist_intersection});
    if (vert)
      v.position.y += sign * step;
    else
      v.position.x += sign * step;
    remaining -= step;

    if (step == dist_intersection) {
      // Snap the along-coordinate to the exact road offset, then draw the turn.
      if (vert)
        v.position.y = intersection_at;
      else
        v.position.x = intersection_at;
      const double u = rng.uniform();
      const double pl = mobility.p_left;
      const double ps = mobility.p_straight;
      if (u < ps) {
        // keep heading
      } else if (u < ps + pl) {
        v.heading = turn_left(v.heading);
      } else {
        v.heading = turn_right(v.heading);
      }
    } else if (step == dist_boundary) {
      if (vert)
        v.position.y = sign > 0 ? hw : -hw;
      else
        v.position.x = sign > 0 ? hw : -hw;
      v.heading = reverse(v.heading);
    }
  }
  return v;
}

// --- config file I/O ------------------------------------------------------

namespace {

std::string resolutions_to_text(const std::vector<Resolution>& rs) {
  std::string out;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (i) out += ",";
    out += rs[i].label + ":" + fmt(rs[i].bits);
  }
  return out;
}

std::vector<Resolution> parse_resolutions(const std::string& s) {
  std::vector<Resolution> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("config: bad resolution entry '" + item + "'");
    out.push_back({item.substr(0, colon), std::stod(item.substr(colon + 1))});
  }
  return out;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

}  // namespace

std::string config_to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "schema_version = " << c.schema_version << "\n";
  os << "vue_count = " << c.vue_count << "\n";
  os << "slots_per_block = " << c.slots_per_block << "\n";
  os << "slot_length_s = " << fmt(c.slot_length) << "\n";
  os << "tx_power_dbm = " << fmt(watts_to_dbm(c.tx_power)) << "\n";
  os << "bandwidth_hz = " << fmt(c.bandwidth) << "\n";
  os << "noise_psd_dbm_hz = " << fmt(watts_to_dbm(c.noise_psd)) << "\n";
  os << "delay_threshold_s = " << fmt(c.delay_threshold) << "\n";
  os << "epsilon = " << fmt(c.epsilon) << "\n";
  os << "displacement_max_m = " << fmt(c.displacement_max) << "\n";
  os << "samples_per_position = " << c.samples_per_position << "\n";
  os << "fit_rate = " << fmt(c.fit_rate) << "\n";
  os << "placement_rate = " << fmt(c.placement_rate) << "\n";
  os << "training_positions = " << c.training_positions << "\n";
  os << "resolutions = " << resolutions_to_text(c.resolutions) << "\n";
  os << "origin_x_m = " << fmt(c.origin.x) << "\n";
  os << "origin_y_m = " << fmt(c.origin.y) << "\n";
  os << "master_seed = " << c.master_seed << "\n";
  os << "half_width_m = " << fmt(c.area.half_width) << "\n";
  os << "road_offsets_x_m = " << fmt_list(c.area.road_offsets_x) << "\n";
  os << "road_offsets_y_m = " << fmt_list(c.area.road_offsets_y) << "\n";
  os << "uav_altitude_m = " << fmt(c.area.uav_altitude) << "\n";
  os << "turn_p_straight = " << fmt(c.mobility.p_straight) << "\n";
  os << "turn_p_left = " << fmt(c.mobility.p_left) << "\n";
  os << "turn_p_right = " << fmt(c.mobility.p_right) << "\n";
  os << "speed_min_mps = " << fmt(c.mobility.speed_min_mps) << "\n";
  os << "speed_max_mps = " << fmt(c.mobility.speed_max_mps) << "\n";
  os << "channel_phi = " << fmt(c.channel_phi) << "\n";
  os << "channel_theta_rad = " << fmt(c.channel_theta) << "\n";
  os << "rician_kappa = " << fmt(c.rician_kappa) << "\n";
  os << "biased_zone_weights = " << fmt_list(c.biased_zone_weights) << "\n";
  os << "evaluation_blocks = " << c.evaluation_blocks << "\n";
  return os.str();
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("config: cannot write " + path);
  f << config_to_text(cfg);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank)
        throw std::runtime_error("config: parse error at line " +
                                 std::to_string(lineno));
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  if (!kv.count("schema_version"))
    throw std::runtime_error("config: missing mandatory schema_version");
  ExperimentConfig c;
  if (std::stoi(kv["schema_version"]) != c.schema_version)
    throw std::runtime_error("config: unsupported schema_version " +
                             kv["schema_version"]);

  auto geti = [&](const char* k, int& out) { if (kv.count(k)) out = std::stoi(kv[k]); };
  auto getd = [&](const char* k, double& out) { if (kv.count(k)) out = std::stod(kv[k]); };
  geti("vue_count", c.vue_count);
  geti("slots_per_block", c.slots_per_block);
  getd("slot_length_s", c.slot_length);
  if (kv.count("tx_power_dbm")) c.tx_power = dbm_to_watts(std::stod(kv["tx_power_dbm"]));
  getd("bandwidth_hz", c.bandwidth);
  if (kv.count("noise_psd_dbm_hz"))
    c.noise_psd = dbm_to_watts(std::stod(kv["noise_psd_dbm_hz"]));
  getd("delay_threshold_s", c.delay_threshold);
  getd("epsilon", c.epsilon);
  getd("displacement_max_m", c.displacement_max);
  geti("samples_per_position", c.samples_per_position);
  getd("fit_rate", c.fit_rate);
  getd("placement_rate", c.placement_rate);
  geti("training_positions", c.training_positions);
  if (kv.count("resolutions")) c.resolutions = parse_resolutions(kv["resolutions"]);
  getd("origin_x_m", c.origin.x);
  getd("origin_y_m", c.origin.y);
  if (kv.count("master_seed")) c.master_seed = std::stoull(kv["master_seed"]);
  getd("half_width_m", c.area.half_width);
  if (kv.count("road_offsets_x_m")) c.area.road_offsets_x = parse_list(kv["road_offsets_x_m"]);
  if (kv.count("road_offsets_y_m")) c.area.road_offsets_y = parse_list(kv["road_offsets_y_m"]);
  getd("uav_altitude_m", c.area.uav_altitude);
  getd("turn_p_straight", c.mobility.p_straight);
  getd("turn_p_left", c.mobility.p_left);
  getd("turn_p_right", c.mobility.p_right);
  getd("speed_min_mps", c.mobility.speed_min_mps);
  getd("speed_max_mps", c.mobility.speed_max_mps);
  getd("channel_phi", c.channel_phi);
  getd("channel_theta_rad", c.channel_theta);
  getd("rician_kappa", c.rician_kappa);
  if (kv.count("biased_zone_weights"))
    c.biased_zone_weights = parse_list(kv["biased_zone_weights"]);
  geti("evaluation_blocks", c.evaluation_blocks);

  c.validate();
  return c;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  // FNV-1a over the canonical text form.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : config_to_text(cfg)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.samples_per_position = 3000;
  c.training_positions = 25;
  c.vue_count = 50;
  c.evaluation_blocks = 2000;
  c.displacement_max = 120.0;
  return c;
}

}  // namespace uavp
