#include "uavp/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace uavp {

void GprHyper::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("gpr: gamma must be > 0");
  if (!(ell > 0.0)) throw std::invalid_argument("gpr: ell must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("gpr: lambda must be >= 0");
}

double kernel(Vec2 p, Vec2 q, const GprHyper& hyper) {
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  return hyper.gamma * std::exp(-(dx * dx + dy * dy) / (2.0 * hyper.ell));
}

namespace {

Eigen::MatrixXd gram_matrix(const std::vector<Vec2>& pos, const GprHyper& h) {
  const int n = static_cast<int>(pos.size());
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    c(i, i) = h.gamma;
    for (int j = i + 1; j < n; ++j) {
      c(i, j) = c(j, i) = kernel(pos[i], pos[j], h);
    }
  }
  return c;
}

// Squared distances, reused by the ell-derivative of the Gram matrix.
Eigen::MatrixXd sqdist_matrix(const std::vector<Vec2>& pos) {
  const int n = static_cast<int>(pos.size());
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double dx = pos[i].x - pos[j].x;
      const double dy = pos[i].y - pos[j].y;
      d(i, j) = d(j, i) = dx * dx + dy * dy;
    }
  }
  return d;
}

Eigen::LLT<Eigen::MatrixXd> factorize(const std::vector<Vec2>& pos,
                                      const GprHyper& h, bool* jittered) {
  Eigen::MatrixXd k = gram_matrix(pos, h);
  k.diagonal().array() += h.lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (jittered) *jittered = false;
  if (llt.info() != Eigen::Success) {
    k.diagonal().array() += 1e-10 * h.gamma;
    llt.compute(k);
    if (jittered) *jittered = true;
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("gpr: covariance factorization failed");
  }
  return llt;
}

}  // namespace

GprModel train_gpr(const std::vector<Vec2>& positions,
                   const Eigen::VectorXd& targets, const GprHyper& hyper) {
  hyper.validate();
  if (positions.empty()) throw std::invalid_argument("gpr: need at least one position");
  if (static_cast<int>(positions.size()) != targets.size())
    throw std::invalid_argument("gpr: positions/targets size mismatch");

  GprModel m;
  m.train_positions = positions;
  m.targets = targets;
  m.hyper = hyper;
  const auto llt = factorize(positions, hyper, nullptr);
  m.alpha = llt.solve(targets);

  Eigen::MatrixXd k = gram_matrix(positions, hyper);
  k.diagonal().array() += hyper.lambda;
  const double resid = (k * m.alpha - targets).norm();
  const double scale = std::max(targets.norm(), 1e-300);
  if (resid / scale > 1e-10)
    throw std::runtime_error("gpr: ill-conditioned system (residual too large)");
  return m;
}

double predict_mean(const GprModel& model, Vec2 e_u) {
  double acc = 0.0;
  for (std::size_t k = 0; k < model.train_positions.size(); ++k)
    acc += model.alpha(static_cast<int>(k)) * kernel(e_u, model.train_positions[k], model.hyper);
  return acc;
}

Vec2 predict_mean_grad(const GprModel& model, Vec2 e_u) {
  Vec2 g{0.0, 0.0};
  const double ell = model.hyper.ell;
  for (std::size_t k = 0; k < model.train_positions.size(); ++k) {
    const Vec2 d = e_u - model.train_positions[k];
    const double c = model.alpha(static_cast<int>(k)) *
                     kernel(e_u, model.train_positions[k], model.hyper) / ell;
    g.x -= c * d.x;
    g.y -= c * d.y;
  }
  return g;
}

double log_marginal_likelihood(const std::vector<Vec2>& positions,
                               const Eigen::VectorXd& targets,
                               const GprHyper& hyper) {
  const int n = static_cast<int>(positions.size());
  const auto llt = factorize(positions, hyper, nullptr);
  const Eigen::VectorXd alpha = llt.solve(targets);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
  logdet *= 2.0;
  return -0.5 * targets.dot(alpha) - 0.5 * logdet - 0.5 * n * std::log(2.0 * M_PI);
}

std::array<double, 3> lml_grad_log(const std::vector<Vec2>& positions,
                                   const Eigen::VectorXd& targets,
                                   const GprHyper& hyper) {
  const int n = static_cast<int>(positions.size());
  const auto llt = factorize(positions, hyper, nullptr);
  const Eigen::VectorXd alpha = llt.solve(targets);
  const Eigen::MatrixXd kinv =
      llt.solve(Eigen::MatrixXd::Identity(n, n));

  const Eigen::MatrixXd c = gram_matrix(positions, hyper);
  const Eigen::MatrixXd d2 = sqdist_matrix(positions);

  // d LML / d theta = 1/2 alpha^T (dK) alpha - 1/2 tr(K^-1 dK), with
  // dK/dln(gamma) = C, dK/dln(ell) = C .* d^2/(2 ell), dK/dln(lambda) = lambda I.
  auto directional = [&](const Eigen::MatrixXd& dk) {
    return 0.5 * alpha.dot(dk * alpha) - 0.5 * (kinv.cwiseProduct(dk)).sum();
  };
  const Eigen::MatrixXd dk_ell = c.cwiseProduct(d2) / (2.0 * hyper.ell);
  return {directional(c), directional(dk_ell),
          0.5 * hyper.lambda * (alpha.squaredNorm() - kinv.trace())};
}

GprHyper default_hyper(const std::vector<Vec2>& positions,
                       const Eigen::VectorXd& targets) {
  const int n = static_cast<int>(positions.size());
  const double mean = targets.mean();
  double var = 0.0;
  for (int i = 0; i < n; ++i) var += (targets(i) - mean) * (targets(i) - mean);
  var = std::max(var / std::max(n, 1), 1e-12);

  double msd = 0.0;
  int cnt = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = positions[i].x - positions[j].x;
      const double dy = positions[i].y - positions[j].y;
      msd += dx * dx + dy * dy;
      ++cnt;
    }
  }
  msd = cnt > 0 ? msd / cnt : 1.0;
  return {var, std::max(msd / 2.0, 1e-12), 1e-2 * var};
}

namespace {

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  for (int i = index; i > 0; i /= base) {
    f /= base;
    r += f * (i % base);
  }
  return r;
}

struct LogPoint {
  std::array<double, 3> t;  // (ln gamma, ln ell, ln lambda)
  GprHyper hyper() const { return {std::exp(t[0]), std::exp(t[1]), std::exp(t[2])}; }
};

}  // namespace

GprHyper fit_hyperparameters(const std::vector<Vec2>& positions,
                             const Eigen::VectorXd& targets, int restarts) {
  const int n = static_cast<int>(positions.size());
  if (n < 3) throw std::invalid_argument("gpr: need at least 3 training positions");
  {
    std::set<std::pair<double, double>> uniq;
    for (const Vec2& p : positions) uniq.insert({p.x, p.y});
    if (static_cast<int>(uniq.size()) < 3)
      throw std::invalid_argument("gpr: degenerate training positions");
  }

  const GprHyper def = default_hyper(positions, targets);
  double d2_min = std::numeric_limits<double>::infinity();
  double d2_max = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = positions[i].x - positions[j].x;
      const double dy = positions[i].y - positions[j].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 > 0.0) d2_min = std::min(d2_min, d2);
      d2_max = std::max(d2_max, d2);
    }
  }

  auto lml_at = [&](const LogPoint& p) -> double {
    try {
      return log_marginal_likelihood(positions, targets, p.hyper());
    } catch (const std::exception&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  // Ascent with a backtracking step in log-space.
  auto ascend = [&](LogPoint p) -> std::pair<LogPoint, double> {
    double value = lml_at(p);
    double step = 0.25;
    for (int it = 0; it < 200; ++it) {
      std::array<double, 3> g{};
      try {
        g = lml_grad_log(positions, targets, p.hyper());
      } catch (const std::exception&) {
        break;
      }
      const double gn = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
      if (gn < 1e-7 * (1.0 + std::abs(value))) break;
      bool moved = false;
      for (int bt = 0; bt < 30; ++bt) {
        LogPoint q = p;
        for (int k = 0; k < 3; ++k) {
          q.t[k] += step * g[k] / gn;
          q.t[k] = std::clamp(q.t[k], -46.0, 46.0);
        }
        const double qv = lml_at(q);
        if (qv > value) {
          p = q;
          value = qv;
          step = std::min(step * 1.5, 4.0);
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    return {p, value};
  };

  LogPoint best{{std::log(def.gamma), std::log(def.ell), std::log(def.lambda)}};
  double best_value = lml_at(best);
  {
    auto [p, v] = ascend(best);
    if (v > best_value) { best = p; best_value = v; }
  }
  for (int r = 1; r <= restarts; ++r) {
    LogPoint start;
    start.t[0] = std::log(def.gamma) + (halton(r, 2) - 0.5) * 8.0;
    start.t[1] = std::log(d2_min / 2.0) +
                 halton(r, 3) * (std::log(2.0 * d2_max) - std::log(d2_min / 2.0));
    start.t[2] = std::log(def.gamma) - 12.0 + halton(r, 5) * 12.0;
    auto [p, v] = ascend(start);
    if (v > best_value) { best = p; best_value = v; }
  }
  GprHyper out = best.hyper();
  out.validate();
  return out;
}

std::vector<ZoneModel> build_zone_models(const std::vector<PositionFit>& fits,
                                         double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("zone models: epsilon must be in (0,1)");

  // The shared position grid is the union of positions seen in the fits.
  auto key = [](Vec2 p) { return std::make_pair(p.x, p.y); };
  std::vector<Vec2> grid;
  std::set<std::pair<double, double>> seen;
  std::set<int> zones;
  for (const PositionFit& f : fits) {
    zones.insert(f.zone);
    if (seen.insert(key(f.position)).second) grid.push_back(f.position);
  }
  std::sort(grid.begin(), grid.end(), [](Vec2 a, Vec2 b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });

  std::map<std::pair<int, std::pair<double, double>>, GevParams> lookup;
  for (const PositionFit& f : fits) lookup[{f.zone, key(f.position)}] = f.params;

  std::string gaps;
  for (int z : zones) {
    for (const Vec2& p : grid) {
      if (!lookup.count({z, key(p)})) {
        gaps += " zone " + std::to_string(z) + " @ (" + std::to_string(p.x) +
                ", " + std::to_string(p.y) + ")";
      }
    }
  }
  if (!gaps.empty())
    throw std::runtime_error("zone models: incomplete dataset, missing:" + gaps);

  const int k = static_cast<int>(grid.size());
  std::vector<ZoneModel> out;
  for (int z : zones) {
    Eigen::VectorXd mu(k), sigma(k), zeta(k);
    for (int i = 0; i < k; ++i) {
      const GevParams& g = lookup.at({z, key(grid[i])});
      mu(i) = g.mu;
      sigma(i) = g.sigma;
      zeta(i) = zeta_transform(g.xi, epsilon);
    }
    ZoneModel zm;
    zm.zone = z;
    zm.model_mu = train_gpr(grid, mu, fit_hyperparameters(grid, mu));
    zm.model_sigma = train_gpr(grid, sigma, fit_hyperparameters(grid, sigma));
    zm.model_zeta = train_gpr(grid, zeta, fit_hyperparameters(grid, zeta));
    out.push_back(std::move(zm));
  }
  return out;
}

// --- JSON bundle ------------------------------------------------------------

namespace {

nlohmann::json model_to_json(const GprModel& m) {
  nlohmann::json j;
  j["targets"] = std::vector<double>(m.targets.data(), m.targets.data() + m.targets.size());
  j["gamma"] = m.hyper.gamma;
  j["ell"] = m.hyper.ell;
  j["lambda"] = m.hyper.lambda;
  return j;
}

GprModel model_from_json(const nlohmann::json& j, const std::vector<Vec2>& positions) {
  const auto t = j.at("targets").get<std::vector<double>>();
  Eigen::VectorXd targets(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) targets(static_cast<int>(i)) = t[i];
  GprHyper h{j.at("gamma").get<double>(), j.at("ell").get<double>(),
             j.at("lambda").get<double>()};
  return train_gpr(positions, targets, h);
}

}  // namespace

std::string zone_models_to_json(const std::vector<ZoneModel>& models) {
  nlohmann::json j;
  j["schema"] = "uavp-zone-models-v1";
  nlohmann::json zones = nlohmann::json::array();
  for (const ZoneModel& zm : models) {
    nlohmann::json z;
    z["zone"] = zm.zone;
    nlohmann::json pos = nlohmann::json::array();
    for (const Vec2& p : zm.model_mu.train_positions)
      pos.push_back({p.x, p.y});
    z["positions"] = pos;
    z["mu"] = model_to_json(zm.model_mu);
    z["sigma"] = model_to_json(zm.model_sigma);
    z["zeta"] = model_to_json(zm.model_zeta);
    zones.push_back(z);
  }
  j["zones"] = zones;
  return j.dump(2) + "\n";
}

std::vector<ZoneModel> zone_models_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("schema", "") != std::string("uavp-zone-models-v1"))
    throw std::runtime_error("zone models: unknown schema");
  std::vector<ZoneModel> out;
  for (const auto& z : j.at("zones")) {
    ZoneModel zm;
    zm.zone = z.at("zone").get<int>();
    std::vector<Vec2> positions;
    for (const auto& p : z.at("positions"))
      positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    zm.model_mu = model_from_json(z.at("mu"), positions);
    zm.model_sigma = model_from_json(z.at("sigma"), positions);
    zm.model_zeta = model_from_json(z.at("zeta"), positions);
    out.push_back(std::move(zm));
  }
  return out;
}

void save_zone_models(const std::vector<ZoneModel>& models, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("zone models: cannot write " + path);
  f << zone_models_to_json(models);
}

std::vector<ZoneModel> load_zone_models(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("zone models: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return zone_models_from_json(ss.str());
}

}  // namespace uavp
