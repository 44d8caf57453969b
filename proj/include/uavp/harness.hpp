#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uavp/channel.hpp"
#include "uavp/evt.hpp"
#include "uavp/gpr.hpp"
#include "uavp/placement.hpp"
#include "uavp/scenario.hpp"

namespace uavp {

enum class Scheme { Proposed, Fixed, Random };
std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

// Per (zone, training position) provenance of the offline collection.
struct ManifestEntry {
  int zone = 0;
  int position_index = 0;
  Vec2 position;
  int sample_count = 0;
  std::string csv_path;
  std::uint64_t seed = 0;
};

struct CollectionManifest {
  std::uint64_t config_hash = 0;
  std::vector<ManifestEntry> entries;
};

std::string manifest_to_json(const CollectionManifest& m);
CollectionManifest manifest_from_json(const std::string& text);
void save_manifest(const CollectionManifest& m, const std::string& path);
CollectionManifest load_manifest(const std::string& path);

// The K training positions: a uniform sqrt(K) x sqrt(K) grid over the area.
std::vector<Vec2> training_grid(const ExperimentConfig& cfg);

// Block-maximum samples of the normalized slot delay for one zone at one
// UAV position. Each block tracks a freshly spawned VUE (uniform on the
// zone's roads) through S0 slots of mobility and fading; blocks use
// disjoint RNG substreams. Non-finite blocks (exact-zero fading) are
// rejected and logged, not stored.
std::vector<DelaySample> collect_block_maxima(const ExperimentConfig& cfg, int zone,
                                              Vec2 uav_position, int n_blocks,
                                              std::uint64_t seed,
                                              int* rejected_blocks = nullptr);

struct OfflineResult {
  CollectionManifest manifest;
  std::vector<PositionFit> fits;
  std::vector<ZoneModel> models;
};

// Full offline stage: collect -> fit -> zeta transform -> train zone models.
// Sample CSVs and the manifest land in out_dir; an existing CSV with a
// matching config hash and enough samples is reused, so interrupted runs
// resume. Re-running with the same seed reproduces byte-identical artifacts.
OfflineResult run_offline_pipeline(const ExperimentConfig& cfg,
                                   const std::string& out_dir);

// Position (and per-VUE levels) for one scheme. Baseline levels copy the
// rounded mean level of the proposed solution, so baselines need either
// trained models or an explicit proposed solution to copy from.
PlacementSolution place_and_select(const std::vector<ZoneModel>& models,
                                   const std::vector<VehicleState>& snapshot,
                                   const ExperimentConfig& cfg, Scheme scheme,
                                   std::uint64_t seed,
                                   const PlacementSolution* proposed_hint = nullptr);

struct EvaluationReport {
  std::string scheme;
  Vec2 position;
  std::vector<double> ccdf_t;      // CCDF support points, seconds
  std::vector<double> ccdf_value;  // Pr{T > t}
  double q50 = 0.0, q90 = 0.0, q99 = 0.0, q999 = 0.0;
  double mean_level = 0.0;
  double violation_freq = 0.0;     // Pr{T_max > T_th} across VUEs and blocks
  int blocks = 0;
};

// Re-simulates fresh blocks with the actual image sizes (V factor included):
// each VUE respawns on its frozen zone's roads at every block start and
// moves through the block.
EvaluationReport evaluate_scheme(const PlacementSolution& solution,
                                 const ExperimentConfig& cfg, int n_blocks,
                                 std::uint64_t seed);

// Order-statistic quantile: the ceil(q*n)-th smallest sample.
double empirical_quantile(std::span<const double> samples, double q);

std::string report_to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const std::string& text);
void save_report(const EvaluationReport& r, const std::string& path);
EvaluationReport load_report(const std::string& path);

// comparison.csv (one row per scheme) plus per-scheme CCDF CSVs in out_dir.
void write_comparison(const std::vector<EvaluationReport>& reports,
                      const std::string& out_dir);

}  // namespace uavp
