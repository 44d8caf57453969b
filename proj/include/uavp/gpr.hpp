#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "uavp/evt.hpp"
#include "uavp/scenario.hpp"

namespace uavp {

struct GprHyper {
  double gamma = 1.0;   // signal variance
  double ell = 1.0;     // squared lengthscale (meters^2), as in exp(-d^2/(2 ell))
  double lambda = 0.0;  // noise / ridge regularizer

  void validate() const;
};

// gamma * exp(-|p-q|^2 / (2 ell))
double kernel(Vec2 p, Vec2 q, const GprHyper& hyper);

// One scalar field over UAV positions: exact GP mean predictor with
// precomputed weights alpha = (C + lambda I)^{-1} targets.
struct GprModel {
  std::vector<Vec2> train_positions;
  Eigen::VectorXd targets;
  GprHyper hyper;
  Eigen::VectorXd alpha;
};

// Solves for alpha with an SPD factorization; adds jitter 1e-10*gamma once
// if the factorization fails, and verifies the residual to 1e-10 relative.
GprModel train_gpr(const std::vector<Vec2>& positions,
                   const Eigen::VectorXd& targets, const GprHyper& hyper);

double predict_mean(const GprModel& model, Vec2 e_u);
// d predict_mean / d e_u; each kernel term contributes
// -alpha_k * gamma * (e_u - p_k)/ell * exp(-|e_u - p_k|^2/(2 ell)).
Vec2 predict_mean_grad(const GprModel& model, Vec2 e_u);

// Log marginal likelihood -1/2 y^T K^-1 y - 1/2 ln det K - n/2 ln 2pi with
// K = C + lambda I, and its gradient with respect to
// (ln gamma, ln ell, ln lambda).
double log_marginal_likelihood(const std::vector<Vec2>& positions,
                               const Eigen::VectorXd& targets,
                               const GprHyper& hyper);
std::array<double, 3> lml_grad_log(const std::vector<Vec2>& positions,
                                   const Eigen::VectorXd& targets,
                                   const GprHyper& hyper);

GprHyper default_hyper(const std::vector<Vec2>& positions,
                       const Eigen::VectorXd& targets);

// Multi-start gradient ascent on the log marginal likelihood in log-space.
// Restarts come from a Halton (2,3,5) sequence spanning generous ranges
// around the data scales; the default point is always a candidate, so the
// result is never worse than default_hyper.
GprHyper fit_hyperparameters(const std::vector<Vec2>& positions,
                             const Eigen::VectorXd& targets, int restarts = 8);

// The three per-zone fields regressed over UAV positions.
struct ZoneModel {
  int zone = 0;
  GprModel model_mu;
  GprModel model_sigma;
  GprModel model_zeta;
};

struct PositionFit {
  int zone = 0;
  Vec2 position;
  GevParams params;
};

// Converts each fitted shape to zeta, assembles the per-zone datasets, and
// trains three models per zone. Every zone must cover the same position
// set; gaps are reported in the error message.
std::vector<ZoneModel> build_zone_models(const std::vector<PositionFit>& fits,
                                         double epsilon);

// Single-document JSON bundle; round-trips bit-exactly.
std::string zone_models_to_json(const std::vector<ZoneModel>& models);
std::vector<ZoneModel> zone_models_from_json(const std::string& text);
void save_zone_models(const std::vector<ZoneModel>& models, const std::string& path);
std::vector<ZoneModel> load_zone_models(const std::string& path);

}  // namespace uavp
