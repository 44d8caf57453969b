#include "uavp/evt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace uavp {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

void GevParams::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("gev: sigma must be > 0");
  if (!std::isfinite(mu) || !std::isfinite(sigma) || !std::isfinite(xi))
    throw std::invalid_argument("gev: non-finite parameter");
  if (std::abs(xi) >= 5.0) throw std::invalid_argument("gev: |xi| out of sane range");
}

double gev_ccdf(double t, const GevParams& p) {
  const double y = (t - p.mu) / p.sigma;
  double w;  // (1 + xi y)^(-1/xi), exceedance exponent
  if (std::abs(p.xi) < kXiEps) {
    w = std::exp(-y);
  } else {
    const double s = 1.0 + p.xi * y;
    if (s <= 0.0) return p.xi > 0.0 ? 1.0 : 0.0;
    w = std::exp(-std::log1p(p.xi * y) / p.xi);
  }
  return -std::expm1(-w);
}

double gev_cdf(double t, const GevParams& p) {
  const double y = (t - p.mu) / p.sigma;
  double w;
  if (std::abs(p.xi) < kXiEps) {
    w = std::exp(-y);
  } else {
    const double s = 1.0 + p.xi * y;
    if (s <= 0.0) return p.xi > 0.0 ? 0.0 : 1.0;
    w = std::exp(-std::log1p(p.xi * y) / p.xi);
  }
  return std::exp(-w);
}

double gev_logpdf(double t, const GevParams& p) {
  const double y = (t - p.mu) / p.sigma;
  if (std::abs(p.xi) < kXiEps) {
    return -std::log(p.sigma) - y - std::exp(-y);
  }
  const double s = 1.0 + p.xi * y;
  if (s <= 0.0) throw std::domain_error("gev: sample outside support");
  const double u = std::log1p(p.xi * y);
  const double a = u / p.xi;                       // (1/xi) ln s
  return -std::log(p.sigma) - a - u - std::exp(-a);
}

namespace {

// Shared core; returns false instead of throwing when out of support.
bool grad_core(double t, const GevParams& p, std::array<double, 3>& out) {
  const double sigma = p.sigma;
  const double xi = p.xi;
  const double y = (t - p.mu) / sigma;
  if (std::abs(xi) < kXiEps) {
    const double e = std::exp(-y);
    out[0] = (1.0 - e) / sigma;
    out[1] = (y * (1.0 - e) - 1.0) / sigma;
    out[2] = 0.5 * y * y * (1.0 - e) - y;
    return true;
  }
  const double s = 1.0 + xi * y;
  if (s <= 0.0 || sigma <= 0.0) return false;
  const double u = std::log1p(xi * y);
  const double a = u / xi;          // (1/xi) ln s
  const double w = std::exp(-a);    // s^(-1/xi)
  const double b = y / s;
  out[0] = ((xi + 1.0) - w) / (sigma * s);
  out[1] = y * out[0] - 1.0 / sigma;
  // Grouped form of the printed xi-derivative; (a - b)/xi cancels the
  // 1/xi^2 blow-up so the expression stays accurate near the Gumbel switch.
  const double g = (a - b) / xi;
  out[2] = (1.0 - w) * g - b;
  return true;
}

}  // namespace

std::array<double, 3> gev_loglik_grad(double t, const GevParams& p) {
  std::array<double, 3> g{};
  if (!grad_core(t, p, g)) throw std::domain_error("gev: sample outside support");
  return g;
}

namespace {

bool in_support(std::span<const double> ts, const GevParams& p) {
  if (!(p.sigma > 0.0)) return false;
  for (double t : ts) {
    if (std::abs(p.xi) >= kXiEps && 1.0 + p.xi * (t - p.mu) / p.sigma <= 0.0)
      return false;
  }
  return true;
}

// Mean log-likelihood and mean gradient over standardized samples.
bool mean_loglik_grad(std::span<const double> ts, const GevParams& p,
                      double& loglik, std::array<double, 3>& grad) {
  Kahan ll, g0, g1, g2;
  std::array<double, 3> g{};
  for (double t : ts) {
    if (!grad_core(t, p, g)) return false;
    ll.add(gev_logpdf(t, p));
    g0.add(g[0]);
    g1.add(g[1]);
    g2.add(g[2]);
  }
  const double n = static_cast<double>(ts.size());
  loglik = ll.sum / n;
  grad = {g0.sum / n, g1.sum / n, g2.sum / n};
  return true;
}

}  // namespace

FitReport fit_gev(std::span<const double> samples, const FitOptions& opt) {
  if (samples.size() < 50) throw std::invalid_argument("fit_gev: need at least 50 samples");
  for (double v : samples) {
    if (!std::isfinite(v) || v <= 0.0)
      throw std::invalid_argument("fit_gev: samples must be finite and positive");
  }

  // Standardize; the fitted parameters transform back exactly.
  Kahan acc;
  for (double v : samples) acc.add(v);
  const double mean = acc.sum / double(samples.size());
  Kahan var_acc;
  for (double v : samples) var_acc.add((v - mean) * (v - mean));
  const double sd = std::sqrt(var_acc.sum / double(samples.size()));
  if (!(sd > 0.0)) throw std::invalid_argument("fit_gev: degenerate (constant) sample");
  std::vector<double> ts(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) ts[i] = (samples[i] - mean) / sd;

  // Gumbel moment start (standardized data has mean 0, stdev 1).
  GevParams p;
  p.sigma = std::sqrt(6.0) / M_PI;
  p.mu = -kEulerGamma * p.sigma;
  p.xi = opt.xi_init;
  for (int widen = 0; !in_support(ts, p); ++widen) {
    if (widen >= 60) throw std::runtime_error("fit_gev: no in-support starting point");
    p.sigma *= 2.0;
  }

  FitReport report;
  double loglik = 0.0;
  std::array<double, 3> grad{};
  mean_loglik_grad(ts, p, loglik, grad);

  bool stalled = false;
  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    double step = 1.0;
    GevParams next = p;
    int halvings = 0;
    for (;; ++halvings) {
      next.mu = p.mu + step * opt.nu * grad[0];
      next.sigma = p.sigma + step * opt.nu * grad[1];
      next.xi = p.xi + step * opt.nu * grad[2];
      if (in_support(ts, next)) break;
      if (halvings >= opt.max_halvings) break;
      step *= 0.5;
    }
    report.support_violations_repaired += halvings;
    if (halvings >= opt.max_halvings) {
      stalled = true;
      break;
    }
    double next_loglik = 0.0;
    std::array<double, 3> next_grad{};
    mean_loglik_grad(ts, next, next_loglik, next_grad);
    const double delta = next_loglik - loglik;
    p = next;
    loglik = next_loglik;
    grad = next_grad;
    if (std::abs(delta) < opt.loglik_tol) {
      report.converged = true;
      ++iter;
      break;
    }
  }

  report.iterations = iter;
  if (stalled) report.converged = false;
  report.grad_norm =
      std::sqrt(grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]);
  report.params = GevParams{mean + sd * p.mu, sd * p.sigma, p.xi};
  report.final_loglik = loglik - std::log(sd);
  report.params.validate();
  return report;
}

double gev_quantile(double q, const GevParams& p) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("gev_quantile: q must be in (0,1)");
  const double l = -std::log(q);  // exceedance exponent at the quantile
  if (std::abs(p.xi) < kXiEps) return p.mu - p.sigma * std::log(l);
  // (-ln q)^(-xi) - 1, evaluated as expm1 for small exponents
  return p.mu + p.sigma * std::expm1(-p.xi * std::log(l)) / p.xi;
}

double zeta_transform(double xi, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("zeta_transform: epsilon must be in (0,1)");
  if (std::abs(xi) < 1e-12) return -std::log(epsilon);
  return std::expm1(-xi * std::log(epsilon)) / xi;
}

double zeta_inverse(double zeta, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("zeta_inverse: epsilon must be in (0,1)");
  if (!(zeta > 0.0)) throw std::invalid_argument("zeta_inverse: zeta must be > 0");
  double lo = -5.0, hi = 5.0;
  while (zeta_transform(lo, epsilon) > zeta) {
    hi = lo;
    lo *= 2.0;
    if (lo < -512.0) throw std::invalid_argument("zeta_inverse: zeta out of range");
  }
  while (zeta_transform(hi, epsilon) < zeta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 512.0) throw std::invalid_argument("zeta_inverse: zeta out of range");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (zeta_transform(mid, epsilon) < zeta ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// --- sample CSV and fit-report JSON ----------------------------------------

void write_sample_csv(const std::string& path, const SampleFileMeta& meta,
                      std::span<const double> values) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("samples: cannot write " + path);
  char buf[64];
  f << "# schema=uavp-samples-v1\n";
  f << "# zone=" << meta.zone << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", meta.uav_x);
  f << "# uav_x=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", meta.uav_y);
  f << "# uav_y=" << buf << "\n";
  f << "# seed=" << meta.seed << "\n";
  f << "# config_hash=" << meta.config_hash << "\n";
  f << "value\n";
  for (double v : values) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    f << buf << "\n";
  }
}

std::vector<double> read_sample_csv(const std::string& path, SampleFileMeta* meta) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("samples: cannot open " + path);
  std::vector<double> out;
  SampleFileMeta m;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string val = line.substr(eq + 1);
      if (key == "zone") m.zone = std::stoi(val);
      else if (key == "uav_x") m.uav_x = std::stod(val);
      else if (key == "uav_y") m.uav_y = std::stod(val);
      else if (key == "seed") m.seed = std::stoull(val);
      else if (key == "config_hash") m.config_hash = std::stoull(val);
      continue;
    }
    if (line == "value" || line == "value\r") continue;
    out.push_back(std::stod(line));
  }
  if (meta) *meta = m;
  return out;
}

std::string fit_report_to_json(const FitReport& r) {
  nlohmann::json j;
  j["schema"] = "uavp-fit-v1";
  j["mu"] = r.params.mu;
  j["sigma"] = r.params.sigma;
  j["xi"] = r.params.xi;
  j["iterations"] = r.iterations;
  j["final_loglik"] = r.final_loglik;
  j["converged"] = r.converged;
  j["support_violations_repaired"] = r.support_violations_repaired;
  j["grad_norm"] = r.grad_norm;
  return j.dump(2) + "\n";
}

FitReport fit_report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("schema", "") != std::string("uavp-fit-v1"))
    throw std::runtime_error("fit report: unknown schema");
  FitReport r;
  r.params = {j.at("mu").get<double>(), j.at("sigma").get<double>(),
              j.at("xi").get<double>()};
  r.iterations = j.at("iterations").get<int>();
  r.final_loglik = j.at("final_loglik").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.support_violations_repaired = j.at("support_violations_repaired").get<int>();
  r.grad_norm = j.value("grad_norm", 0.0);
  return r;
}

}  // namespace uavp
