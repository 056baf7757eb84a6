#include "prefkit/thurstonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>

#include "prefkit/common.hpp"
#include "prefkit/normal.hpp"

namespace prefkit {

const char* to_string(SigmaMode m) {
  switch (m) {
    case SigmaMode::PerOption: return "PerOption";
    case SigmaMode::Shared: return "Shared";
    case SigmaMode::FixedUnit: return "FixedUnit";
  }
  return "?";
}

const char* to_string(LossKind l) {
  return l == LossKind::CrossEntropy ? "CrossEntropy" : "SquaredError";
}

std::optional<SigmaMode> sigma_mode_from_string(const std::string& s) {
  if (s == "PerOption") return SigmaMode::PerOption;
  if (s == "Shared") return SigmaMode::Shared;
  if (s == "FixedUnit") return SigmaMode::FixedUnit;
  return std::nullopt;
}

std::optional<LossKind> loss_kind_from_string(const std::string& s) {
  if (s == "CrossEntropy") return LossKind::CrossEntropy;
  if (s == "SquaredError") return LossKind::SquaredError;
  return std::nullopt;
}

nlohmann::ordered_json FitConfig::to_json() const {
  nlohmann::ordered_json j;
  j["max_iterations"] = max_iterations;
  j["gradient_tolerance"] = gradient_tolerance;
  j["sigma_floor"] = sigma_floor;
  j["sigma_mode"] = to_string(sigma_mode);
  j["loss"] = to_string(loss);
  j["seed"] = seed;
  j["initial_mu_scale"] = initial_mu_scale;
  return j;
}

FitConfig FitConfig::from_json(const nlohmann::json& j) {
  FitConfig c;
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.gradient_tolerance = j.value("gradient_tolerance", c.gradient_tolerance);
  c.sigma_floor = j.value("sigma_floor", c.sigma_floor);
  if (j.contains("sigma_mode")) {
    auto m = sigma_mode_from_string(j["sigma_mode"].get<std::string>());
    if (!m)
      throw ConfigError("fit config: unknown sigma_mode '" +
                        j["sigma_mode"].get<std::string>() + "'");
    c.sigma_mode = *m;
  }
  if (j.contains("loss")) {
    auto l = loss_kind_from_string(j["loss"].get<std::string>());
    if (!l)
      throw ConfigError("fit config: unknown loss '" +
                        j["loss"].get<std::string>() + "'");
    c.loss = *l;
  }
  c.seed = j.value("seed", c.seed);
  c.initial_mu_scale = j.value("initial_mu_scale", c.initial_mu_scale);
  return c;
}

FitProblem FitProblem::from_matrix(const PreferenceMatrix& matrix) {
  FitProblem p;
  p.options = matrix.options();
  for (std::size_t x = 0; x < matrix.size(); ++x) {
    for (std::size_t y = x + 1; y < matrix.size(); ++y) {
      if (!matrix.has_data(x, y)) continue;
      p.pairs.push_back({static_cast<std::uint32_t>(x),
                         static_cast<std::uint32_t>(y), matrix.wins(x, y),
                         matrix.trials(x, y)});
    }
  }
  return p;
}

namespace {

constexpr double kProbEps = 1e-6;
constexpr double kSigmaFixed = 0.7071067811865475244;  // 1/sqrt(2)

void check_config(const FitConfig& c) {
  if (c.max_iterations < 1)
    throw ConfigError("fit config: max_iterations must be >= 1");
  if (!(c.gradient_tolerance > 0))
    throw ConfigError("fit config: gradient_tolerance must be positive");
  if (!(c.sigma_floor > 0))
    throw ConfigError("fit config: sigma_floor must be positive");
  if (!std::isfinite(c.initial_mu_scale))
    throw ConfigError("fit config: initial_mu_scale must be finite");
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double softplus(double t) {
  if (t > 30.0) return t;
  if (t < -30.0) return std::exp(t);
  return std::log1p(std::exp(t));
}

// Inverse of sigma = floor + softplus(theta), used to seed theta.
double theta_for_sigma(double sigma, double floor) {
  const double v = sigma - floor;
  if (!(v > 0)) throw ConfigError("fit config: sigma_floor exceeds 1/sqrt(2)");
  return std::log(std::expm1(v));
}

// Contribution of one observed pair to the loss and to the handful of
// parameters it touches. dth_* is the sigma-parameter slot: for Shared the
// whole contribution lands in dth_x.
struct PairTerm {
  double loss = 0.0;
  double dmu_x = 0.0;
  double dmu_y = 0.0;
  double dth_x = 0.0;
  double dth_y = 0.0;
};

PairTerm pair_term(const PairObservation& ob, const std::vector<double>& params,
                   std::size_t n, const FitConfig& config) {
  double sx, sy, dsx_dth = 0.0, dsy_dth = 0.0;
  switch (config.sigma_mode) {
    case SigmaMode::FixedUnit:
      sx = sy = kSigmaFixed;
      break;
    case SigmaMode::Shared: {
      const double th = params[n];
      sx = sy = config.sigma_floor + softplus(th);
      dsx_dth = dsy_dth = sigmoid(th);
      break;
    }
    case SigmaMode::PerOption: {
      const double thx = params[n + ob.x];
      const double thy = params[n + ob.y];
      sx = config.sigma_floor + softplus(thx);
      sy = config.sigma_floor + softplus(thy);
      dsx_dth = sigmoid(thx);
      dsy_dth = sigmoid(thy);
      break;
    }
    default:
      throw ConfigError("fit config: bad sigma_mode");
  }

  const double s2 = sx * sx + sy * sy;
  const double s = std::sqrt(s2);
  const double d = (params[ob.x] - params[ob.y]) / s;
  const double q = std_normal_cdf(d);   // predicted P(x beats y)
  const double r = std_normal_cdf(-d);  // exactly 1 - q
  const double w = ob.wins;
  const double l = ob.trials - ob.wins;

  PairTerm t;
  double dL_dd;
  if (config.loss == LossKind::CrossEntropy) {
    t.loss = -(w * std::log(std::clamp(q, kProbEps, 1.0 - kProbEps)) +
               l * std::log(std::clamp(r, kProbEps, 1.0 - kProbEps)));
    // The clamp flattens the loss outside (eps, 1-eps); the gradient there
    // is exactly zero, matching the flattened objective.
    const double inside_q = q > kProbEps && q < 1.0 - kProbEps ? w / q : 0.0;
    const double inside_r = r > kProbEps && r < 1.0 - kProbEps ? l / r : 0.0;
    dL_dd = -std_normal_pdf(d) * (inside_q - inside_r);
  } else {
    const double diff = q - w / static_cast<double>(ob.trials);
    t.loss = ob.trials * diff * diff;
    dL_dd = 2.0 * ob.trials * diff * std_normal_pdf(d);
  }

  t.dmu_x = dL_dd / s;
  t.dmu_y = -dL_dd / s;
  if (config.sigma_mode != SigmaMode::FixedUnit) {
    // d = (mu_x - mu_y)/s, so dd/dsigma_x = -d * sigma_x / s^2.
    const double common = dL_dd * (-d / s2);
    const double dL_dsx = common * sx;
    const double dL_dsy = common * sy;
    if (config.sigma_mode == SigmaMode::Shared) {
      t.dth_x = (dL_dsx + dL_dsy) * dsx_dth;
    } else {
      t.dth_x = dL_dsx * dsx_dth;
      t.dth_y = dL_dsy * dsy_dth;
    }
  }
  return t;
}

LossGrad reduce_terms(const std::vector<PairTerm>& terms,
                      const FitProblem& problem, const FitConfig& config) {
  const std::size_t n = problem.option_count();
  LossGrad out;
  out.grad.assign(param_count(problem, config), 0.0);
  // Fixed canonical-order accumulation: the result cannot depend on how the
  // terms were produced (thread count, scheduling).
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    const auto& ob = problem.pairs[i];
    out.loss += t.loss;
    out.grad[ob.x] += t.dmu_x;
    out.grad[ob.y] += t.dmu_y;
    if (config.sigma_mode == SigmaMode::Shared) {
      out.grad[n] += t.dth_x;
    } else if (config.sigma_mode == SigmaMode::PerOption) {
      out.grad[n + ob.x] += t.dth_x;
      out.grad[n + ob.y] += t.dth_y;
    }
  }
  return out;
}

LossGrad loss_and_gradient_impl(const std::vector<double>& params,
                                const FitProblem& problem,
                                const FitConfig& config, bool parallel) {
  if (params.size() != param_count(problem, config))
    throw DataError("loss_and_gradient: parameter vector has wrong size");
  const std::size_t n = problem.option_count();
  std::vector<PairTerm> terms(problem.pairs.size());
  const auto count = static_cast<std::int64_t>(problem.pairs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::int64_t i = 0; i < count; ++i)
    terms[static_cast<std::size_t>(i)] =
        pair_term(problem.pairs[static_cast<std::size_t>(i)], params, n,
                  config);
  (void)parallel;
  return reduce_terms(terms, problem, config);
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

struct Curvature {
  std::vector<double> s;
  std::vector<double> y;
  double rho = 0.0;
};

// Standard two-loop recursion; returns the descent direction -H*g with the
// usual gamma = s.y/y.y initial scaling.
std::vector<double> lbfgs_direction(const std::vector<double>& g,
                                    const std::deque<Curvature>& history) {
  std::vector<double> q = g;
  std::vector<double> alpha(history.size());
  for (std::size_t k = history.size(); k-- > 0;) {
    const auto& h = history[k];
    alpha[k] = h.rho * dot(h.s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * h.y[i];
  }
  if (!history.empty()) {
    const auto& last = history.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& x : q) x *= gamma;
  }
  for (std::size_t k = 0; k < history.size(); ++k) {
    const auto& h = history[k];
    const double beta = h.rho * dot(h.y, q);
    for (std::size_t i = 0; i < q.size(); ++i)
      q[i] += (alpha[k] - beta) * h.s[i];
  }
  for (double& x : q) x = -x;
  return q;
}

struct Optimum {
  std::vector<double> params;
  LossGrad state;
  int iterations = 0;
  bool converged = false;
};

Optimum minimize(const FitProblem& problem, const FitConfig& config) {
  constexpr std::size_t kHistory = 8;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;

  std::vector<double> p = initial_params(problem, config);
  LossGrad cur = loss_and_gradient(p, problem, config);
  std::deque<Curvature> history;

  Optimum out;
  for (;;) {
    if (inf_norm(cur.grad) < config.gradient_tolerance) {
      out.converged = true;
      break;
    }
    if (out.iterations >= config.max_iterations) break;

    std::vector<double> dir = lbfgs_direction(cur.grad, history);
    double slope = dot(cur.grad, dir);
    if (!(slope < 0.0) || !all_finite(dir)) {
      // Quasi-Newton direction unusable: fall back to steepest descent.
      history.clear();
      for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = -cur.grad[i];
      slope = -dot(cur.grad, cur.grad);
    }

    // First step is pure gradient; keep it modest so huge initial gradients
    // do not fling the iterate into a non-finite region.
    double alpha =
        history.empty() ? 1.0 / std::max(1.0, inf_norm(cur.grad)) : 1.0;
    bool accepted = false;
    std::vector<double> p_next(p.size());
    LossGrad next;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      for (std::size_t i = 0; i < p.size(); ++i)
        p_next[i] = p[i] + alpha * dir[i];
      next = loss_and_gradient(p_next, problem, config);
      if (std::isfinite(next.loss) &&
          next.loss <= cur.loss + kArmijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // stalled; report whatever tolerance says

    Curvature c;
    c.s.resize(p.size());
    c.y.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      c.s[i] = p_next[i] - p[i];
      c.y[i] = next.grad[i] - cur.grad[i];
    }
    const double sy = dot(c.s, c.y);
    if (sy > 1e-12) {
      c.rho = 1.0 / sy;
      history.push_back(std::move(c));
      if (history.size() > kHistory) history.pop_front();
    }
    p.swap(p_next);
    cur = std::move(next);
    ++out.iterations;
  }
  out.params = std::move(p);
  out.state = std::move(cur);
  return out;
}

}  // namespace

std::size_t param_count(const FitProblem& problem, const FitConfig& config) {
  const std::size_t n = problem.option_count();
  switch (config.sigma_mode) {
    case SigmaMode::FixedUnit: return n;
    case SigmaMode::Shared: return n + 1;
    case SigmaMode::PerOption: return 2 * n;
  }
  return n;
}

std::vector<double> initial_params(const FitProblem& problem,
                                   const FitConfig& config) {
  check_config(config);
  const std::size_t n = problem.option_count();
  std::vector<double> wins(n, 0.0), trials(n, 0.0);
  for (const auto& ob : problem.pairs) {
    wins[ob.x] += ob.wins;
    trials[ob.x] += ob.trials;
    wins[ob.y] += ob.trials - ob.wins;
    trials[ob.y] += ob.trials;
  }
  std::vector<double> params(param_count(problem, config), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double rate =
        trials[i] > 0 ? std::clamp(wins[i] / trials[i], 0.01, 0.99) : 0.5;
    params[i] = config.initial_mu_scale * std_normal_quantile(rate);
  }
  if (config.sigma_mode != SigmaMode::FixedUnit) {
    const double th0 = theta_for_sigma(kSigmaFixed, config.sigma_floor);
    for (std::size_t i = n; i < params.size(); ++i) params[i] = th0;
  }
  return params;
}

std::vector<double> sigmas_from_params(const std::vector<double>& params,
                                       const FitProblem& problem,
                                       const FitConfig& config) {
  const std::size_t n = problem.option_count();
  std::vector<double> sigma(n, kSigmaFixed);
  if (config.sigma_mode == SigmaMode::Shared) {
    std::fill(sigma.begin(), sigma.end(),
              config.sigma_floor + softplus(params[n]));
  } else if (config.sigma_mode == SigmaMode::PerOption) {
    for (std::size_t i = 0; i < n; ++i)
      sigma[i] = config.sigma_floor + softplus(params[n + i]);
  }
  return sigma;
}

LossGrad loss_and_gradient(const std::vector<double>& params,
                           const FitProblem& problem, const FitConfig& config) {
  return loss_and_gradient_impl(params, problem, config, true);
}

LossGrad loss_and_gradient_serial(const std::vector<double>& params,
                                  const FitProblem& problem,
                                  const FitConfig& config) {
  return loss_and_gradient_impl(params, problem, config, false);
}

ComponentInfo comparison_components(const FitProblem& problem) {
  const std::size_t n = problem.option_count();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  for (const auto& ob : problem.pairs) {
    const std::size_t ra = find(ob.x), rb = find(ob.y);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  ComponentInfo info;
  info.label.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (info.label[root] < 0) info.label[root] = info.count++;
    info.label[i] = info.label[root];
  }
  return info;
}

UtilityModel fit(const FitProblem& problem, const FitConfig& config) {
  check_config(config);
  if (problem.option_count() < 2)
    throw DataError("fit: need at least 2 options");
  if (problem.pairs.empty())
    throw DataError("fit: no pairs with valid trials");
  for (const auto& ob : problem.pairs) {
    if (ob.x >= problem.option_count() || ob.y >= problem.option_count() ||
        ob.x == ob.y || ob.trials <= 0 || ob.wins < 0 || ob.wins > ob.trials)
      throw DataError("fit: malformed pair observation");
  }

  const ComponentInfo components = comparison_components(problem);
  Optimum opt = minimize(problem, config);

  const std::size_t n = problem.option_count();
  std::vector<double> mu(opt.params.begin(), opt.params.begin() + n);
  std::vector<double> sigma = sigmas_from_params(opt.params, problem, config);

  // Location is a gauge freedom; anchor each component's mean at zero so
  // utilities are comparable within (and only within) a component.
  std::vector<double> sum(components.count, 0.0);
  std::vector<int> sz(components.count, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sum[components.label[i]] += mu[i];
    ++sz[components.label[i]];
  }
  for (std::size_t i = 0; i < n; ++i)
    mu[i] -= sum[components.label[i]] / sz[components.label[i]];

  FitDiagnostics diag;
  diag.final_loss = opt.state.loss;
  diag.gradient_norm = inf_norm(opt.state.grad);
  diag.iterations = opt.iterations;
  diag.converged = opt.converged;
  diag.connected = components.connected();
  diag.component_count = components.count;
  return UtilityModel(problem.options, std::move(mu), std::move(sigma), diag);
}

UtilityModel fit(const PreferenceMatrix& matrix, const FitConfig& config) {
  return fit(FitProblem::from_matrix(matrix), config);
}

}  // namespace prefkit
