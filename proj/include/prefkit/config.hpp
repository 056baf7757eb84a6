#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefkit/coherence.hpp"
#include "prefkit/corpus.hpp"
#include "prefkit/delphi.hpp"
#include "prefkit/reporting.hpp"
#include "prefkit/thurstonian.hpp"

namespace prefkit {

enum class BackendKind { Mock, Synthetic, Http };

const char* to_string(BackendKind k);
std::optional<BackendKind> backend_kind_from_string(const std::string& s);

// Declarative run description. Parsing is tolerant of missing optional
// fields; validate() then reports every problem at once (missing seeds,
// dangling paths, bad ranges) instead of stopping at the first. Seeds have
// no defaults on purpose: a run that cannot be replayed is worthless.
struct RunConfig {
  std::string config_path;  // where this config was loaded from, if a file
  std::string corpus_path;
  std::string output_dir = "out";

  // Backend
  BackendKind backend_kind = BackendKind::Synthetic;
  std::string base_url;         // http
  std::string model_id;         // http
  double temperature = 1.0;     // http, echoed into the request body
  std::string system_message;   // http, optional
  std::string api_key_env = "PREFKIT_API_KEY";
  std::string truth_path;       // synthetic: ground-truth utility model JSON
  std::string mock_response = "A";

  // Collection
  int repetitions = 10;  // comparisons per pair
  int parallelism = 1;
  int retry_limit = 3;
  std::optional<double> backoff_base_s;  // default: 1s http, 0 otherwise
  double backoff_factor = 2.0;
  std::string prompt_template = kDefaultPromptTemplate;

  // Seeds (mandatory)
  std::optional<std::uint64_t> schedule_seed;  // also drives elicitation
  std::optional<std::uint64_t> fit_seed;
  std::optional<std::uint64_t> coherence_seed;

  // Analysis
  FitConfig fit;  // fit.seed is overwritten with *fit_seed
  long long transitivity_triplets = 10000;
  TransitivityMode transitivity_mode = TransitivityMode::Sampled;
  TiePolicy tie_policy = TiePolicy::CountIfPredNear;
  QuartileRule quartile_rule = QuartileRule::Interpolated;
  WinRateScope alignment_scope = WinRateScope::AllOpponents;

  // Expert-panel inputs (optional)
  std::string ratings_path;
  std::string rankings_path;
  std::string variants_path;

  double backoff_base() const {
    if (backoff_base_s) return *backoff_base_s;
    return backend_kind == BackendKind::Http ? 1.0 : 0.0;
  }

  // Throws ConfigError on malformed JSON shape (wrong types, unknown enum
  // values); everything checkable-but-wrong is left for validate().
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  nlohmann::ordered_json to_json() const;  // echo for manifests

  // All violations, empty when the config is runnable. Checks ranges, seed
  // presence, backend completeness and that referenced files exist.
  std::vector<std::string> validate() const;
};

}  // namespace prefkit
