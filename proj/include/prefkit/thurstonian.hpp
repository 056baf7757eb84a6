#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefkit/aggregation.hpp"
#include "prefkit/utility_model.hpp"

namespace prefkit {

// How latent standard deviations are treated during fitting. FixedUnit pins
// every sigma at 1/sqrt(2) so each pair's combined variance is 1 and the fit
// reduces to a probit model over mean differences; the other modes learn
// sigma through a softplus map with a hard floor.
enum class SigmaMode { PerOption, Shared, FixedUnit };
enum class LossKind { CrossEntropy, SquaredError };

const char* to_string(SigmaMode m);
const char* to_string(LossKind l);
std::optional<SigmaMode> sigma_mode_from_string(const std::string& s);
std::optional<LossKind> loss_kind_from_string(const std::string& s);

struct FitConfig {
  int max_iterations = 5000;
  double gradient_tolerance = 1e-8;  // infinity norm
  double sigma_floor = 1e-3;
  SigmaMode sigma_mode = SigmaMode::FixedUnit;
  LossKind loss = LossKind::CrossEntropy;
  std::uint64_t seed = 0;  // recorded with the fit; the optimizer itself is
                           // deterministic and draws nothing
  double initial_mu_scale = 1.0;

  nlohmann::ordered_json to_json() const;
  static FitConfig from_json(const nlohmann::json& j);
};

// One pair with at least one valid trial: wins counts the first index.
struct PairObservation {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  int wins = 0;
  int trials = 0;
};

// Compact view of a PreferenceMatrix for the optimizer's hot loop.
struct FitProblem {
  std::vector<std::string> options;
  std::vector<PairObservation> pairs;  // canonical order (x < y)

  std::size_t option_count() const { return options.size(); }
  static FitProblem from_matrix(const PreferenceMatrix& matrix);
};

// Parameter vector layout: mu[0..N), then sigma parameters depending on
// sigma_mode (none for FixedUnit, one shared for Shared, N for PerOption).
std::size_t param_count(const FitProblem& problem, const FitConfig& config);
std::vector<double> initial_params(const FitProblem& problem,
                                   const FitConfig& config);
std::vector<double> sigmas_from_params(const std::vector<double>& params,
                                       const FitProblem& problem,
                                       const FitConfig& config);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Trial-count-weighted loss over all observed pairs with its analytic
// gradient. Predictions are clamped to [1e-6, 1-1e-6] inside the logs only;
// empirical win rates enter exactly. A non-finite loss is returned, not
// thrown — the optimizer treats such a step as rejected.
//
// The plain entry point parallelizes over pairs when built with OpenMP; the
// _serial variant is the single-threaded reference. Both accumulate
// per-pair contributions in canonical pair order, so their results are
// bitwise identical to each other and independent of the thread count.
LossGrad loss_and_gradient(const std::vector<double>& params,
                           const FitProblem& problem, const FitConfig& config);
LossGrad loss_and_gradient_serial(const std::vector<double>& params,
                                  const FitProblem& problem,
                                  const FitConfig& config);

// Connected components of the comparison graph (options joined by pairs
// with data). Utilities are only comparable within a component.
struct ComponentInfo {
  int count = 0;
  std::vector<int> label;  // per option, 0-based component id
  bool connected() const { return count <= 1; }
};
ComponentInfo comparison_components(const FitProblem& problem);

// Fits latent utilities by full-batch L-BFGS with backtracking line search.
// Deterministic: identical inputs give bitwise-identical diagnostics on one
// platform. After convergence mu is recentered to mean zero within each
// connected component (location is a gauge freedom). Disconnected graphs are
// fitted jointly and flagged through diagnostics.connected.
UtilityModel fit(const PreferenceMatrix& matrix, const FitConfig& config = {});
UtilityModel fit(const FitProblem& problem, const FitConfig& config = {});

}  // namespace prefkit
