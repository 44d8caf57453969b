#pragma once

#include <string>
#include <vector>

#include "uavp/gpr.hpp"
#include "uavp/scenario.hpp"

namespace uavp {

struct VueContext {
  int vue_id = 0;
  int zone = 0;       // zone at optimization time (frozen at block start)
  double a_i = 0.0;   // A1 * T_th / V, bit-seconds ratio
};

// Per-VUE GEV characteristics shared zone-wide, with the clamps applied.
struct EffectiveParams {
  double mu = 0.0;
  double sigma = 0.0;
  double zeta = 0.0;
};

inline constexpr double kSigmaMin = 1e-6;  // seconds
inline constexpr double kZetaMin = 1e-6;

struct PlacementSolution {
  Vec2 e_u;
  double altitude = 0.0;
  std::vector<double> b_star;   // per-VUE continuous payload, bits
  std::vector<int> levels;      // per-VUE resolution level, 1-based
  std::vector<VueContext> vues;
  double objective = 0.0;       // sum of -a_i/(sigma zeta + mu), bits-negative
  int iterations = 0;
  int projections_applied = 0;
  bool feasible = false;
  int clamps_applied = 0;
};

// GPR predictions (mu, sigma, zeta) per zone at e_u; sigma and zeta are
// clamped below (GPR means can extrapolate nonpositively). clamp_count, when
// given, receives the number of clamped components.
std::vector<EffectiveParams> effective_params(const std::vector<ZoneModel>& models,
                                              Vec2 e_u,
                                              const std::vector<VueContext>& vues,
                                              int* clamp_count = nullptr);

// B* = a / (sigma zeta + mu), the payload meeting the URLLC constraint with
// equality. Throws when the denominator is nonpositive.
double optimal_payload(const EffectiveParams& params, double a_i);

struct ResolutionChoice {
  int level = 1;  // 1-based
  bool feasible = true;
};
// Largest level with A_l <= B*; below A_1 returns level 1 flagged infeasible.
ResolutionChoice select_resolution(double b_star,
                                   const std::vector<Resolution>& resolutions);

struct ObjectiveEval {
  double objective = 0.0;  // sum_i -a_i/(sigma zeta + mu)
  Vec2 grad;               // d objective / d e_u (step size excluded)
};
// Per-VUE gradient contribution a_i/(sigma zeta + mu)^2 *
// (grad mu + zeta grad sigma + sigma grad zeta); the solver applies
// e <- e - delta * grad, which is the displayed update with its leading
// -delta factored out.
ObjectiveEval objective_and_grad(const std::vector<ZoneModel>& models, Vec2 e_u,
                                 const std::vector<VueContext>& vues);

// Feasibility: the displacement disk around origin plus B*_i >= A1 for all
// VUEs. Infeasible candidates are first projected radially onto the disk,
// then backtracked toward the last feasible iterate by halving.
bool placement_feasible(const std::vector<ZoneModel>& models, Vec2 e_u,
                        const std::vector<VueContext>& vues,
                        const ExperimentConfig& cfg);
Vec2 project_feasible(Vec2 candidate, Vec2 last_feasible,
                      const std::vector<ZoneModel>& models,
                      const std::vector<VueContext>& vues,
                      const ExperimentConfig& cfg, bool* projected = nullptr);

// Projected gradient descent over the UAV position, then one-shot discrete
// snapping of payloads to resolution levels.
PlacementSolution solve_placement(const std::vector<ZoneModel>& models,
                                  const std::vector<VueContext>& vues,
                                  const ExperimentConfig& cfg);

// VUE contexts for a spawned population: zone frozen at the current position.
std::vector<VueContext> make_vue_contexts(const std::vector<VehicleState>& vehicles,
                                          const ExperimentConfig& cfg);

std::string solution_to_json(const PlacementSolution& s);
PlacementSolution solution_from_json(const std::string& text);
void save_solution(const PlacementSolution& s, const std::string& path);
PlacementSolution load_solution(const std::string& path);

}  // namespace uavp
