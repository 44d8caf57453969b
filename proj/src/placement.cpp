#include "uavp/placement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace uavp {

namespace {

const ZoneModel* find_zone(const std::vector<ZoneModel>& models, int zone) {
  for (const ZoneModel& m : models)
    if (m.zone == zone) return &m;
  return nullptr;
}

struct ZoneEval {
  EffectiveParams params;
  Vec2 grad_mu, grad_sigma, grad_zeta;  // zero when the component is clamped
  int clamps = 0;
};

ZoneEval eval_zone(const ZoneModel& m, Vec2 e_u) {
  ZoneEval out;
  out.params.mu = predict_mean(m.model_mu, e_u);
  out.params.sigma = predict_mean(m.model_sigma, e_u);
  out.params.zeta = predict_mean(m.model_zeta, e_u);
  out.grad_mu = predict_mean_grad(m.model_mu, e_u);
  out.grad_sigma = predict_mean_grad(m.model_sigma, e_u);
  out.grad_zeta = predict_mean_grad(m.model_zeta, e_u);
  if (out.params.sigma < kSigmaMin) {
    out.params.sigma = kSigmaMin;
    out.grad_sigma = {0.0, 0.0};
    ++out.clamps;
  }
  if (out.params.zeta < kZetaMin) {
    out.params.zeta = kZetaMin;
    out.grad_zeta = {0.0, 0.0};
    ++out.clamps;
  }
  return out;
}

// Zones are shared by many VUEs; evaluate each zone once.
std::map<int, ZoneEval> eval_zones(const std::vector<ZoneModel>& models, Vec2 e_u,
                                   const std::vector<VueContext>& vues) {
  std::map<int, ZoneEval> out;
  for (const VueContext& v : vues) {
    if (out.count(v.zone)) continue;
    const ZoneModel* m = find_zone(models, v.zone);
    if (!m)
      throw std::runtime_error("placement: no trained model for zone " +
                               std::to_string(v.zone));
    out.emplace(v.zone, eval_zone(*m, e_u));
  }
  return out;
}

}  // namespace

std::vector<EffectiveParams> effective_params(const std::vector<ZoneModel>& models,
                                              Vec2 e_u,
                                              const std::vector<VueContext>& vues,
                                              int* clamp_count) {
  const auto zones = eval_zones(models, e_u, vues);
  if (clamp_count) {
    *clamp_count = 0;
    for (const auto& [z, e] : zones) *clamp_count += e.clamps;
  }
  std::vector<EffectiveParams> out;
  out.reserve(vues.size());
  for (const VueContext& v : vues) out.push_back(zones.at(v.zone).params);
  return out;
}

double optimal_payload(const EffectiveParams& p, double a_i) {
  const double denom = p.sigma * p.zeta + p.mu;
  if (!(denom > 0.0))
    throw std::runtime_error("placement: infeasible channel (sigma zeta + mu <= 0)");
  if (!(a_i > 0.0)) throw std::invalid_argument("placement: a_i must be > 0");
  return a_i / denom;
}

ResolutionChoice select_resolution(double b_star,
                                   const std::vector<Resolution>& resolutions) {
  if (resolutions.empty()) throw std::invalid_argument("placement: empty resolution list");
  if (b_star < resolutions.front().bits) return {1, false};
  int level = 1;
  for (std::size_t l = 0; l < resolutions.size(); ++l) {
    if (resolutions[l].bits <= b_star) level = static_cast<int>(l) + 1;
  }
  return {level, true};
}

ObjectiveEval objective_and_grad(const std::vector<ZoneModel>& models, Vec2 e_u,
                                 const std::vector<VueContext>& vues) {
  const auto zones = eval_zones(models, e_u, vues);
  ObjectiveEval out;
  for (const VueContext& v : vues) {
    const ZoneEval& z = zones.at(v.zone);
    const double denom = z.params.sigma * z.params.zeta + z.params.mu;
    if (!(denom > 0.0))
      throw std::runtime_error("placement: infeasible channel at query position");
    out.objective += -v.a_i / denom;
    // d/d e_u of (sigma zeta + mu), product rule on the two GPR fields
    const Vec2 dd = z.grad_mu + z.params.zeta * z.grad_sigma +
                    z.params.sigma * z.grad_zeta;
    const double w = v.a_i / (denom * denom);
    out.grad = out.grad + w * dd;
  }
  return out;
}

bool placement_feasible(const std::vector<ZoneModel>& models, Vec2 e_u,
                        const std::vector<VueContext>& vues,
                        const ExperimentConfig& cfg) {
  const Vec2 d = e_u - cfg.origin;
  if (d.x * d.x + d.y * d.y > cfg.displacement_max * cfg.displacement_max)
    return false;
  const double a1 = cfg.min_image_bits();
  try {
    const auto params = effective_params(models, e_u, vues);
    for (std::size_t i = 0; i < vues.size(); ++i) {
      if (optimal_payload(params[i], vues[i].a_i) < a1) return false;
    }
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

Vec2 project_feasible(Vec2 candidate, Vec2 last_feasible,
                      const std::vector<ZoneModel>& models,
                      const std::vector<VueContext>& vues,
                      const ExperimentConfig& cfg, bool* projected) {
  if (projected) *projected = false;
  if (placement_feasible(models, candidate, vues, cfg)) return candidate;
  if (projected) *projected = true;

  Vec2 p = candidate;
  const Vec2 d = p - cfg.origin;
  const double r = norm(d);
  if (r > cfg.displacement_max && r > 0.0) {
    // Shrink a hair inside the disk so the exact feasibility check is
    // immune to the rounding of the radial scaling.
    p = cfg.origin + ((1.0 - 1e-14) * cfg.displacement_max / r) * d;
  }
  if (placement_feasible(models, p, vues, cfg)) return p;

  // Payload constraint still violated: halve toward the last feasible point.
  for (int h = 0; h < 60; ++h) {
    p = 0.5 * (p + last_feasible);
    if (placement_feasible(models, p, vues, cfg)) return p;
  }
  throw std::runtime_error("placement: projection failed to find a feasible point");
}

namespace {

Vec2 find_feasible_start(const std::vector<ZoneModel>& models,
                         const std::vector<VueContext>& vues,
                         const ExperimentConfig& cfg) {
  if (placement_feasible(models, cfg.origin, vues, cfg)) return cfg.origin;
  // Radial search over the displacement disk.
  for (int ring = 1; ring <= 8; ++ring) {
    const double r = cfg.displacement_max * ring / 8.0;
    for (int k = 0; k < 16; ++k) {
      const double a = 2.0 * M_PI * k / 16.0;
      const Vec2 p = cfg.origin + Vec2{r * std::cos(a), r * std::sin(a)};
      if (placement_feasible(models, p, vues, cfg)) return p;
    }
  }
  throw std::runtime_error("placement: no feasible starting point");
}

}  // namespace

PlacementSolution solve_placement(const std::vector<ZoneModel>& models,
                                  const std::vector<VueContext>& vues,
                                  const ExperimentConfig& cfg) {
  if (vues.empty()) throw std::invalid_argument("placement: no VUEs");

  PlacementSolution sol;
  sol.altitude = cfg.area.uav_altitude;
  sol.vues = vues;

  Vec2 e = find_feasible_start(models, vues, cfg);
  double obj = objective_and_grad(models, e, vues).objective;
  double delta = cfg.placement_rate;
  const double stop_displacement = 1e-3;  // meters
  const int max_iterations = 10000;

  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    const ObjectiveEval ev = objective_and_grad(models, e, vues);
    Vec2 next;
    double next_obj = 0.0;
    bool accepted = false;
    double step = delta;
    // Accept only non-increasing objectives; locally halve the rate when a
    // projected step overshoots.
    for (int h = 0; h < 60; ++h) {
      bool projected = false;
      Vec2 cand = e - step * ev.grad;
      try {
        cand = project_feasible(cand, e, models, vues, cfg, &projected);
      } catch (const std::exception&) {
        step *= 0.5;
        continue;
      }
      const double cand_obj = objective_and_grad(models, cand, vues).objective;
      if (cand_obj <= obj) {
        next = cand;
        next_obj = cand_obj;
        if (projected) ++sol.projections_applied;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const double moved = norm(next - e);
    e = next;
    obj = next_obj;
    if (moved < stop_displacement) {
      ++iter;
      break;
    }
  }

  sol.e_u = e;
  sol.iterations = iter;

  int clamps = 0;
  const auto params = effective_params(models, e, vues, &clamps);
  sol.clamps_applied = clamps;
  sol.b_star.resize(vues.size());
  sol.levels.resize(vues.size());
  sol.objective = 0.0;
  sol.feasible = true;
  const double a1 = cfg.min_image_bits();
  for (std::size_t i = 0; i < vues.size(); ++i) {
    sol.b_star[i] = optimal_payload(params[i], vues[i].a_i);
    const ResolutionChoice rc = select_resolution(sol.b_star[i], cfg.resolutions);
    sol.levels[i] = rc.level;
    if (!rc.feasible || sol.b_star[i] < a1) sol.feasible = false;
    sol.objective += -vues[i].a_i / (params[i].sigma * params[i].zeta + params[i].mu);
  }
  return sol;
}

std::vector<VueContext> make_vue_contexts(const std::vector<VehicleState>& vehicles,
                                          const ExperimentConfig& cfg) {
  std::vector<VueContext> out;
  out.reserve(vehicles.size());
  const double a = cfg.payload_ratio();
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    out.push_back({static_cast<int>(i), zone_of(vehicles[i].position, cfg.area), a});
  }
  return out;
}

// --- JSON -------------------------------------------------------------------

std::string solution_to_json(const PlacementSolution& s) {
  nlohmann::json j;
  j["schema"] = "uavp-solution-v1";
  j["x"] = s.e_u.x;
  j["y"] = s.e_u.y;
  j["altitude"] = s.altitude;
  j["objective"] = s.objective;
  j["iterations"] = s.iterations;
  j["projections_applied"] = s.projections_applied;
  j["feasible"] = s.feasible;
  j["clamps_applied"] = s.clamps_applied;
  nlohmann::json vues = nlohmann::json::array();
  for (std::size_t i = 0; i < s.vues.size(); ++i) {
    vues.push_back({{"id", s.vues[i].vue_id},
                    {"zone", s.vues[i].zone},
                    {"a", s.vues[i].a_i},
                    {"b_star", s.b_star[i]},
                    {"level", s.levels[i]}});
  }
  j["vues"] = vues;
  return j.dump(2) + "\n";
}

PlacementSolution solution_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("schema", "") != std::string("uavp-solution-v1"))
    throw std::runtime_error("solution: unknown schema");
  PlacementSolution s;
  s.e_u = {j.at("x").get<double>(), j.at("y").get<double>()};
  s.altitude = j.at("altitude").get<double>();
  s.objective = j.at("objective").get<double>();
  s.iterations = j.at("iterations").get<int>();
  s.projections_applied = j.at("projections_applied").get<int>();
  s.feasible = j.at("feasible").get<bool>();
  s.clamps_applied = j.at("clamps_applied").get<int>();
  for (const auto& v : j.at("vues")) {
    s.vues.push_back({v.at("id").get<int>(), v.at("zone").get<int>(),
                      v.at("a").get<double>()});
    s.b_star.push_back(v.at("b_star").get<double>());
    s.levels.push_back(v.at("level").get<int>());
  }
  return s;
}

void save_solution(const PlacementSolution& s, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("solution: cannot write " + path);
  f << solution_to_json(s);
}

PlacementSolution load_solution(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("solution: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return solution_from_json(ss.str());
}

}  // namespace uavp
