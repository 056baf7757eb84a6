#include "prefkit/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "prefkit/common.hpp"

namespace prefkit {

const char* to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Mock: return "mock";
    case BackendKind::Synthetic: return "synthetic";
    case BackendKind::Http: return "http";
  }
  return "?";
}

std::optional<BackendKind> backend_kind_from_string(const std::string& s) {
  if (s == "mock") return BackendKind::Mock;
  if (s == "synthetic") return BackendKind::Synthetic;
  if (s == "http") return BackendKind::Http;
  return std::nullopt;
}

namespace {

// Accepts only the ${VAR} interpolation form; plaintext secrets in config
// files are rejected later by validate().
std::optional<std::string> env_interpolation(const std::string& value) {
  if (value.size() >= 4 && value.rfind("${", 0) == 0 && value.back() == '}')
    return value.substr(2, value.size() - 3);
  return std::nullopt;
}

void expect_object(const nlohmann::json& j, const char* what) {
  if (!j.is_object())
    throw ConfigError(std::string("config: '") + what + "' must be an object");
}

template <typename T>
T get_as(const nlohmann::json& j, const char* key, const char* where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: bad value for ") + where + "." +
                      key);
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, const char* where,
              T& out) {
  if (j.contains(key)) out = get_as<T>(j, key, where);
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig c;
  read_opt(j, "corpus", "", c.corpus_path);
  read_opt(j, "output_dir", "", c.output_dir);
  read_opt(j, "repetitions", "", c.repetitions);
  read_opt(j, "parallelism", "", c.parallelism);
  read_opt(j, "retry_limit", "", c.retry_limit);
  read_opt(j, "prompt_template", "", c.prompt_template);

  if (j.contains("backend")) {
    const auto& b = j["backend"];
    expect_object(b, "backend");
    if (b.contains("kind")) {
      const auto kind = get_as<std::string>(b, "kind", "backend");
      auto k = backend_kind_from_string(kind);
      if (!k)
        throw ConfigError("config: backend.kind must be mock, synthetic or "
                          "http, got '" + kind + "'");
      c.backend_kind = *k;
    }
    read_opt(b, "base_url", "backend", c.base_url);
    read_opt(b, "model", "backend", c.model_id);
    read_opt(b, "temperature", "backend", c.temperature);
    read_opt(b, "system_message", "backend", c.system_message);
    read_opt(b, "truth", "backend", c.truth_path);
    read_opt(b, "mock_response", "backend", c.mock_response);
    read_opt(b, "api_key_env", "backend", c.api_key_env);
    if (b.contains("api_key")) {
      // Only ${VAR} is accepted here; validate() flags anything else.
      const auto raw = get_as<std::string>(b, "api_key", "backend");
      if (auto var = env_interpolation(raw)) {
        c.api_key_env = *var;
      } else {
        c.api_key_env.clear();  // marks the violation for validate()
      }
    }
    if (b.contains("backoff_base_s"))
      c.backoff_base_s = get_as<double>(b, "backoff_base_s", "backend");
    read_opt(b, "backoff_factor", "backend", c.backoff_factor);
  }

  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    expect_object(s, "seeds");
    if (s.contains("schedule"))
      c.schedule_seed = get_as<std::uint64_t>(s, "schedule", "seeds");
    if (s.contains("fit"))
      c.fit_seed = get_as<std::uint64_t>(s, "fit", "seeds");
    if (s.contains("coherence"))
      c.coherence_seed = get_as<std::uint64_t>(s, "coherence", "seeds");
  }

  if (j.contains("fit")) {
    expect_object(j["fit"], "fit");
    try {
      c.fit = FitConfig::from_json(j["fit"]);
    } catch (const ConfigError&) {
      throw;
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: bad value inside fit");
    }
  }

  if (j.contains("coherence")) {
    const auto& co = j["coherence"];
    expect_object(co, "coherence");
    read_opt(co, "n_triplets", "coherence", c.transitivity_triplets);
    if (co.contains("mode")) {
      const auto mode = get_as<std::string>(co, "mode", "coherence");
      auto m = transitivity_mode_from_string(mode);
      if (!m)
        throw ConfigError("config: coherence.mode must be Sampled or "
                          "Exhaustive, got '" + mode + "'");
      c.transitivity_mode = *m;
    }
    if (co.contains("tie_policy")) {
      const auto policy = get_as<std::string>(co, "tie_policy", "coherence");
      auto p = tie_policy_from_string(policy);
      if (!p)
        throw ConfigError("config: coherence.tie_policy must be "
                          "CountIfPredNear, AlwaysWrong or Exclude, got '" +
                          policy + "'");
      c.tie_policy = *p;
    }
  }

  if (j.contains("delphi")) {
    const auto& d = j["delphi"];
    expect_object(d, "delphi");
    read_opt(d, "ratings", "delphi", c.ratings_path);
    read_opt(d, "rankings", "delphi", c.rankings_path);
    read_opt(d, "variants", "delphi", c.variants_path);
    if (d.contains("quartile_rule")) {
      const auto rule = get_as<std::string>(d, "quartile_rule", "delphi");
      auto r = quartile_rule_from_string(rule);
      if (!r)
        throw ConfigError("config: delphi.quartile_rule must be Interpolated "
                          "or NearestOrderStatistic, got '" + rule + "'");
      c.quartile_rule = *r;
    }
  }

  if (j.contains("report")) {
    const auto& r = j["report"];
    expect_object(r, "report");
    if (r.contains("alignment_scope")) {
      const auto scope = get_as<std::string>(r, "alignment_scope", "report");
      auto s = win_rate_scope_from_string(scope);
      if (!s)
        throw ConfigError("config: report.alignment_scope must be "
                          "AllOpponents or CrossSectionOnly, got '" + scope +
                          "'");
      c.alignment_scope = *s;
    }
  }

  if (c.fit_seed) c.fit.seed = *c.fit_seed;
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + ": invalid JSON: " + e.what());
  }
  RunConfig c = from_json(j);
  c.config_path = path;
  return c;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["corpus"] = corpus_path;
  j["output_dir"] = output_dir;
  j["repetitions"] = repetitions;
  j["parallelism"] = parallelism;
  j["retry_limit"] = retry_limit;
  j["prompt_template"] = prompt_template;

  nlohmann::ordered_json b;
  b["kind"] = to_string(backend_kind);
  if (backend_kind == BackendKind::Http) {
    b["base_url"] = base_url;
    b["model"] = model_id;
    b["temperature"] = temperature;
    if (!system_message.empty()) b["system_message"] = system_message;
    b["api_key_env"] = api_key_env;  // the key itself never appears anywhere
  } else if (backend_kind == BackendKind::Synthetic) {
    b["truth"] = truth_path;
  } else {
    b["mock_response"] = mock_response;
  }
  b["backoff_base_s"] = backoff_base();
  b["backoff_factor"] = backoff_factor;
  j["backend"] = std::move(b);

  nlohmann::ordered_json seeds;
  if (schedule_seed) seeds["schedule"] = *schedule_seed;
  if (fit_seed) seeds["fit"] = *fit_seed;
  if (coherence_seed) seeds["coherence"] = *coherence_seed;
  j["seeds"] = std::move(seeds);

  j["fit"] = fit.to_json();
  j["coherence"] = {{"n_triplets", transitivity_triplets},
                    {"mode", to_string(transitivity_mode)},
                    {"tie_policy", to_string(tie_policy)}};
  if (!ratings_path.empty() || !rankings_path.empty() ||
      !variants_path.empty()) {
    nlohmann::ordered_json d;
    if (!ratings_path.empty()) d["ratings"] = ratings_path;
    if (!rankings_path.empty()) d["rankings"] = rankings_path;
    if (!variants_path.empty()) d["variants"] = variants_path;
    d["quartile_rule"] = to_string(quartile_rule);
    j["delphi"] = std::move(d);
  }
  j["report"] = {{"alignment_scope", to_string(alignment_scope)}};
  return j;
}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> v;
  auto need_file = [&v](const std::string& path, const char* what) {
    if (path.empty()) return;
    if (!std::filesystem::exists(path))
      v.push_back(std::string(what) + " path does not exist: " + path);
  };

  if (corpus_path.empty())
    v.push_back("corpus path is required");
  else
    need_file(corpus_path, "corpus");

  if (repetitions < 1) v.push_back("repetitions must be >= 1");
  if (parallelism < 1) v.push_back("parallelism must be >= 1");
  if (retry_limit < 1) v.push_back("retry_limit must be >= 1");
  if (!(temperature >= 0.0) || !std::isfinite(temperature))
    v.push_back("backend.temperature must be a finite value >= 0");
  if (backoff_base_s && !(*backoff_base_s >= 0.0))
    v.push_back("backend.backoff_base_s must be >= 0");
  if (!(backoff_factor >= 1.0))
    v.push_back("backend.backoff_factor must be >= 1");
  if (prompt_template.find("{option_a}") == std::string::npos ||
      prompt_template.find("{option_b}") == std::string::npos)
    v.push_back("prompt_template must contain {option_a} and {option_b}");

  if (!schedule_seed) v.push_back("seeds.schedule is required");
  if (!fit_seed) v.push_back("seeds.fit is required");
  if (!coherence_seed) v.push_back("seeds.coherence is required");

  switch (backend_kind) {
    case BackendKind::Http:
      if (base_url.empty()) v.push_back("backend.base_url is required for http");
      if (model_id.empty()) v.push_back("backend.model is required for http");
      if (api_key_env.empty())
        v.push_back("backend.api_key must use ${VAR} environment "
                    "interpolation, not a literal secret");
      break;
    case BackendKind::Synthetic:
      if (truth_path.empty())
        v.push_back("backend.truth is required for the synthetic backend");
      else
        need_file(truth_path, "backend.truth");
      break;
    case BackendKind::Mock:
      break;
  }

  if (transitivity_triplets < 1 &&
      transitivity_mode == TransitivityMode::Sampled)
    v.push_back("coherence.n_triplets must be >= 1 in Sampled mode");
  if (fit.max_iterations < 1) v.push_back("fit.max_iterations must be >= 1");
  if (!(fit.gradient_tolerance > 0))
    v.push_back("fit.gradient_tolerance must be positive");
  if (!(fit.sigma_floor > 0)) v.push_back("fit.sigma_floor must be positive");

  need_file(ratings_path, "delphi.ratings");
  need_file(rankings_path, "delphi.rankings");
  need_file(variants_path, "delphi.variants");
  if (ratings_path.empty() &&
      (!rankings_path.empty() || !variants_path.empty()))
    v.push_back("delphi.rankings/variants need delphi.ratings as well");

  if (output_dir.empty()) v.push_back("output_dir must not be empty");
  return v;
}

}  // namespace prefkit
