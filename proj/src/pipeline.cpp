#include "prefkit/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "prefkit/aggregation.hpp"
#include "prefkit/common.hpp"
#include "prefkit/digest.hpp"

namespace fs = std::filesystem;

namespace prefkit {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec)
      throw Error("cannot create directory " + p.parent_path().string() +
                  ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
  out.close();
  if (!out) throw Error("failed while writing file: " + path);
}

nlohmann::json parse_file(const std::string& path) {
  try {
    return nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
}

void require_artifact(const std::string& path, const char* producer) {
  if (!fs::exists(path))
    throw DataError("missing input artifact " + path + " (run the " +
                    producer + " stage first)");
}

std::map<std::string, RatingDataset> load_delphi_rounds(
    const RunConfig& config) {
  auto rounds = load_ratings_csv_file(config.ratings_path);
  if (!config.rankings_path.empty())
    merge_rankings_csv_file(rounds, config.rankings_path);
  if (!config.variants_path.empty())
    merge_variants_csv_file(rounds, config.variants_path);
  return rounds;
}

}  // namespace

StagePaths stage_paths(const RunConfig& config) {
  const fs::path dir(config.output_dir);
  StagePaths p;
  p.schedule = (dir / "schedule.json").string();
  p.trials = (dir / "trials.jsonl").string();
  p.matrix_json = (dir / "matrix.json").string();
  p.matrix_csv = (dir / "matrix.csv").string();
  p.order_effects = (dir / "order_effects.json").string();
  p.model = (dir / "model.json").string();
  p.coherence = (dir / "coherence.json").string();
  p.delphi = (dir / "delphi.json").string();
  p.report_dir = dir.string();
  return p;
}

ScenarioSet load_corpus(const RunConfig& config) {
  return load_scenario_set_file(config.corpus_path).set;
}

std::unique_ptr<RespondentBackend> make_backend(const RunConfig& config) {
  switch (config.backend_kind) {
    case BackendKind::Mock:
      return std::make_unique<MockBackend>(config.mock_response);
    case BackendKind::Synthetic:
      return std::make_unique<SyntheticBackend>(
          UtilityModel::load(config.truth_path));
    case BackendKind::Http: {
      HttpBackendConfig hc;
      hc.base_url = config.base_url;
      hc.model = config.model_id;
      hc.temperature = config.temperature;
      hc.system_message = config.system_message;
      hc.api_key_env = config.api_key_env;
      return std::make_unique<HttpBackend>(hc);
    }
  }
  throw ConfigError("unknown backend kind");
}

void write_schedule(const std::string& path, const RunConfig& config,
                    const std::vector<TrialSpec>& schedule) {
  nlohmann::ordered_json j;
  j["corpus"] = config.corpus_path;
  j["corpus_sha256"] = sha256_hex_file(config.corpus_path);
  j["repetitions"] = config.repetitions;
  j["seed"] = *config.schedule_seed;
  j["trial_fields"] = {"trial_id", "x", "y", "order", "repetition"};
  auto& trials = j["trials"] = nlohmann::ordered_json::array();
  for (const auto& t : schedule)
    trials.push_back({t.trial_id, t.pair.first, t.pair.second,
                      to_string(t.order), t.repetition_index});
  write_text(path, j.dump() + "\n");
}

std::vector<TrialSpec> read_schedule(const std::string& path,
                                     const RunConfig& config) {
  const auto j = parse_file(path);
  const auto stored = j.at("corpus_sha256").get<std::string>();
  const auto current = sha256_hex_file(config.corpus_path);
  if (stored != current)
    throw DataError("schedule " + path +
                    " was built from a different corpus (digest mismatch); "
                    "rerun the schedule stage");
  std::vector<TrialSpec> schedule;
  for (const auto& t : j.at("trials")) {
    if (!t.is_array() || t.size() != 5)
      throw DataError("schedule " + path + ": malformed trial entry");
    TrialSpec spec;
    spec.trial_id = t[0].get<std::string>();
    spec.pair = {t[1].get<std::string>(), t[2].get<std::string>()};
    auto order = order_from_string(t[3].get<std::string>());
    if (!order) throw DataError("schedule " + path + ": bad order value");
    spec.order = *order;
    spec.repetition_index = t[4].get<int>();
    schedule.push_back(std::move(spec));
  }
  if (schedule.empty()) throw DataError("schedule " + path + ": no trials");
  return schedule;
}

ScheduleSize schedule_size(const RunConfig& config) {
  const ScenarioSet set = load_corpus(config);
  ScheduleSize s;
  s.pairs = set.size() * (set.size() - 1) / 2;
  s.trials = s.pairs * static_cast<std::size_t>(config.repetitions);
  return s;
}

void stage_schedule(const RunConfig& config) {
  const ScenarioSet set = load_corpus(config);
  const auto schedule =
      build_schedule(set, config.repetitions, *config.schedule_seed);
  write_schedule(stage_paths(config).schedule, config, schedule);
}

ElicitSummary stage_elicit(const RunConfig& config, bool resume) {
  const StagePaths paths = stage_paths(config);
  require_artifact(paths.schedule, "schedule");
  const ScenarioSet set = load_corpus(config);
  const auto schedule = read_schedule(paths.schedule, config);
  auto backend = make_backend(config);

  ElicitOptions options;
  options.parallelism = config.parallelism;
  options.retry_limit = config.retry_limit;
  options.seed = *config.schedule_seed;
  options.backoff_base_s = config.backoff_base();
  options.backoff_factor = config.backoff_factor;
  options.prompt_template = config.prompt_template;
  options.log_path = paths.trials;
  options.resume = resume;
  const std::size_t step = std::max<std::size_t>(schedule.size() / 10, 1);
  options.progress = [step](std::size_t done, std::size_t total) {
    if (done % step == 0 || done == total)
      std::fprintf(stderr, "elicit: %zu/%zu trials\n", done, total);
  };
  if (!resume && fs::exists(paths.trials)) {
    // A fresh elicitation must not append to a stale log.
    std::error_code ec;
    fs::remove(paths.trials, ec);
    if (ec)
      throw Error("cannot remove stale trial log " + paths.trials + ": " +
                  ec.message());
  }
  fs::create_directories(config.output_dir);

  const auto records = run_elicitation(set, schedule, *backend, options);
  ElicitSummary summary;
  summary.total = records.size();
  for (const auto& r : records) {
    if (r.parsed == ParsedChoice::Invalid)
      ++summary.invalid;
    else
      ++summary.valid;
  }
  return summary;
}

void stage_aggregate(const RunConfig& config) {
  const StagePaths paths = stage_paths(config);
  require_artifact(paths.trials, "elicit");
  const ScenarioSet set = load_corpus(config);
  const auto records = read_trial_log_file(paths.trials);
  const PreferenceMatrix matrix = aggregate(records, set);
  matrix.save(paths.matrix_json);
  matrix.save(paths.matrix_csv);
  write_text(paths.order_effects,
             order_effect_report(matrix).to_json().dump(2) + "\n");
}

void stage_fit(const RunConfig& config) {
  const StagePaths paths = stage_paths(config);
  require_artifact(paths.matrix_json, "aggregate");
  const PreferenceMatrix matrix = PreferenceMatrix::load(paths.matrix_json);
  FitConfig fc = config.fit;
  fc.seed = *config.fit_seed;
  const UtilityModel model = fit(matrix, fc);
  nlohmann::ordered_json j = model.to_json();
  j["fit_config"] = fc.to_json();
  write_text(paths.model, j.dump(2) + "\n");
}

namespace {

CoherenceReport compute_coherence(const RunConfig& config,
                                  const PreferenceMatrix& matrix,
                                  const UtilityModel& model) {
  CoherenceConfig cc;
  cc.n_triplets = config.transitivity_triplets;
  cc.seed = *config.coherence_seed;
  cc.mode = config.transitivity_mode;
  cc.tie_policy = config.tie_policy;
  return coherence_report(matrix, model, cc);
}

}  // namespace

void stage_coherence(const RunConfig& config) {
  const StagePaths paths = stage_paths(config);
  require_artifact(paths.matrix_json, "aggregate");
  require_artifact(paths.model, "fit");
  const PreferenceMatrix matrix = PreferenceMatrix::load(paths.matrix_json);
  const UtilityModel model = UtilityModel::load(paths.model);
  write_text(paths.coherence,
             compute_coherence(config, matrix, model).to_json().dump(2) + "\n");
}

void stage_delphi(const RunConfig& config) {
  if (config.ratings_path.empty())
    throw ConfigError("delphi stage requires delphi.ratings in the config");
  const StagePaths paths = stage_paths(config);
  const auto rounds = load_delphi_rounds(config);
  std::map<std::string, std::string> sections;
  if (!config.corpus_path.empty())
    sections = load_corpus(config).item_sections();
  write_text(paths.delphi,
             delphi_report(rounds, sections, config.quartile_rule).dump(2) +
                 "\n");
}

void stage_report(const RunConfig& config) {
  const StagePaths paths = stage_paths(config);
  require_artifact(paths.matrix_json, "aggregate");
  require_artifact(paths.model, "fit");
  const ScenarioSet set = load_corpus(config);
  const PreferenceMatrix matrix = PreferenceMatrix::load(paths.matrix_json);
  const UtilityModel model = UtilityModel::load(paths.model);

  ReportBundle bundle;
  bundle.config_echo = config.to_json();
  nlohmann::ordered_json seeds;
  seeds["schedule"] = *config.schedule_seed;
  seeds["fit"] = *config.fit_seed;
  seeds["coherence"] = *config.coherence_seed;
  bundle.seeds = std::move(seeds);

  auto digest_input = [&bundle](const char* label, const std::string& path) {
    if (path.empty()) return;
    bundle.input_digests[label] = {{"path", path},
                                   {"sha256", sha256_hex_file(path)}};
  };
  digest_input("config", config.config_path);
  digest_input("corpus", config.corpus_path);
  digest_input("truth", config.truth_path);
  digest_input("ratings", config.ratings_path);
  digest_input("rankings", config.rankings_path);
  digest_input("variants", config.variants_path);

  bundle.utilities = utility_ranking(model, set);
  bundle.scenario_rates_all =
      scenario_win_rates(matrix, set, WinRateScope::AllOpponents);
  bundle.scenario_rates_cross =
      scenario_win_rates(matrix, set, WinRateScope::CrossSectionOnly);
  bundle.section_rates_all =
      section_win_rates(matrix, set, WinRateScope::AllOpponents);
  bundle.section_rates_cross =
      section_win_rates(matrix, set, WinRateScope::CrossSectionOnly);
  bundle.coherence = compute_coherence(config, matrix, model);

  if (!config.ratings_path.empty()) {
    const auto rounds = load_delphi_rounds(config);
    const auto sections = set.item_sections();
    bundle.delphi = delphi_report(rounds, sections, config.quartile_rule);
    // Alignment joins the final round's consensus picture with the model's
    // section win rates under the configured scope.
    const RatingDataset* last = nullptr;
    for (const auto& [id, round] : rounds)
      if (!round.ratings.empty()) last = &round;
    if (last != nullptr) {
      const auto expert =
          section_summary(*last, sections, config.quartile_rule);
      const auto& rates =
          config.alignment_scope == WinRateScope::AllOpponents
              ? bundle.section_rates_all
              : bundle.section_rates_cross;
      bundle.alignment = alignment_table(expert, rates, bundle.utilities);
    }
  }
  export_report(bundle, paths.report_dir);
}

void run_all(const RunConfig& config, bool resume) {
  stage_schedule(config);
  stage_elicit(config, resume);
  stage_aggregate(config);
  stage_fit(config);
  stage_coherence(config);
  if (!config.ratings_path.empty()) stage_delphi(config);
  stage_report(config);
}

}  // namespace prefkit
