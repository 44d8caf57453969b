#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uavp {

struct GevParams {
  double mu = 0.0;     // location, seconds
  double sigma = 1.0;  // scale, seconds
  double xi = 0.0;     // shape

  void validate() const;
};

struct FitOptions {
  double nu = 5e-4;            // gradient-ascent learning rate
  double loglik_tol = 1e-9;    // stop when |delta mean log-likelihood| < tol
  int max_iterations = 100000;
  int max_halvings = 60;       // per-step support repairs
  double xi_init = 0.1;
};

struct FitReport {
  GevParams params;
  int iterations = 0;
  double final_loglik = 0.0;  // mean log-likelihood, nats/sample
  bool converged = false;
  int support_violations_repaired = 0;
  double grad_norm = 0.0;     // sample-averaged gradient norm at exit
};

// Shape threshold below which the Gumbel-limit branch is used. The grouped
// evaluation below stays accurate down to ~1e-8; switching there keeps the
// branch discontinuity at O(1e-8), well under the 1e-6 continuity budget.
inline constexpr double kXiEps = 1e-8;

// Pr{T > t} of the GEV law: 1 - exp(-(1 + xi (t-mu)/sigma)^(-1/xi)), with
// the Gumbel limit at small |xi|. Total: beyond the support it returns the
// limiting value (1 below a xi>0 lower endpoint, 0 above a xi<0 upper one).
double gev_ccdf(double t, const GevParams& p);
double gev_cdf(double t, const GevParams& p);

// ln f(t; mu, sigma, xi). Requires 1 + xi (t-mu)/sigma > 0.
double gev_logpdf(double t, const GevParams& p);

// The three partial derivatives of ln f with respect to (mu, sigma, xi).
// Throws std::domain_error when the sample is outside the support (the
// caller must shrink its step).
std::array<double, 3> gev_loglik_grad(double t, const GevParams& p);

// Maximum-likelihood fit by fixed-rate gradient ascent on the sample-mean
// log-likelihood, from a Gumbel moment start. Iterates are kept in-support
// by halving the offending step. Samples are standardized internally, which
// the GEV family is closed under, so the returned parameters are the MLE of
// the raw data while the learning rate stays scale-free.
FitReport fit_gev(std::span<const double> samples, const FitOptions& options = {});

// Inverse CDF: the t with CDF(t) = q.
double gev_quantile(double q, const GevParams& p);

// zeta = (eps^(-xi) - 1)/xi, the shape transform used by the regression
// targets; strictly increasing in xi, positive, -ln(eps) at xi = 0.
double zeta_transform(double xi, double epsilon);
// Inverse of zeta_transform in xi (bisection on the monotone map).
double zeta_inverse(double zeta, double epsilon);

// CSV sample files: one value per row, preceded by `# key=value` metadata
// lines carrying at least zone and uav position.
struct SampleFileMeta {
  int zone = 0;
  double uav_x = 0.0;
  double uav_y = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};
void write_sample_csv(const std::string& path, const SampleFileMeta& meta,
                      std::span<const double> values);
std::vector<double> read_sample_csv(const std::string& path, SampleFileMeta* meta = nullptr);

std::string fit_report_to_json(const FitReport& report);
FitReport fit_report_from_json(const std::string& text);

}  // namespace uavp
