// prefkit: schedule, collect and analyze pairwise preference judgments.
//
// Every subcommand takes --config pointing at a run configuration JSON and
// works through files under its output_dir, so stages can be run one at a
// time, inspected, and rerun. Exit codes: 0 success, 2 configuration or
// usage problems, 1 anything that went wrong at runtime. Errors also go to
// stderr as a single machine-readable JSON line.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prefkit/common.hpp"
#include "prefkit/config.hpp"
#include "prefkit/corpus.hpp"
#include "prefkit/pipeline.hpp"

namespace {

void emit_error(const char* kind, const std::string& message,
                const std::vector<std::string>& details = {}) {
  nlohmann::ordered_json j;
  j["error"]["kind"] = kind;
  j["error"]["message"] = message;
  if (!details.empty()) j["error"]["details"] = details;
  std::fprintf(stderr, "%s\n", j.dump().c_str());
}

// Operational commands refuse to start from a config that validate() would
// reject; the full violation list lands in the error message.
void require_valid(const prefkit::RunConfig& config) {
  const auto violations = config.validate();
  if (violations.empty()) return;
  throw prefkit::ConfigError("configuration is not runnable:\n  - " +
                             prefkit::join(violations, "\n  - "));
}

// `validate` reports instead of running: every config violation (exit 2),
// then, if the config itself is fine, corpus structure in relaxed mode
// (exit 1) so all problems surface in one pass.
int do_validate(const prefkit::RunConfig& config) {
  const auto violations = config.validate();
  if (!violations.empty()) {
    for (const auto& v : violations) std::printf("invalid: %s\n", v.c_str());
    emit_error("config",
               "configuration has " + std::to_string(violations.size()) +
                   " violation(s)",
               violations);
    return 2;
  }

  prefkit::LoadOptions options;
  options.strict = false;
  const auto result = prefkit::load_scenario_set_file(config.corpus_path, options);
  if (!result.violations.empty()) {
    for (const auto& v : result.violations)
      std::printf("invalid: %s\n", v.c_str());
    emit_error("data",
               "corpus " + config.corpus_path + " has " +
                   std::to_string(result.violations.size()) + " violation(s)",
               result.violations);
    return 1;
  }

  std::printf("ok: %s: %zu scenarios, %zu items, %zu sections\n",
              config.corpus_path.c_str(), result.set.size(),
              result.set.item_sections().size(),
              result.set.sections_present().size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pairwise preference elicitation and analysis toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  bool resume = false;
  bool dry_run = false;

  auto* validate_cmd =
      app.add_subcommand("validate", "check the config and corpus, reporting every violation");
  auto* schedule_cmd =
      app.add_subcommand("schedule", "build the order-balanced trial schedule");
  auto* elicit_cmd =
      app.add_subcommand("elicit", "run the scheduled comparisons against the backend");
  auto* aggregate_cmd =
      app.add_subcommand("aggregate", "tally the trial log into a preference matrix");
  auto* fit_cmd =
      app.add_subcommand("fit", "fit utilities to the preference matrix");
  auto* coherence_cmd =
      app.add_subcommand("coherence", "score transitivity, model accuracy and sharpness");
  auto* delphi_cmd =
      app.add_subcommand("delphi", "summarize expert panel ratings by round");
  auto* report_cmd =
      app.add_subcommand("report", "assemble and export the report bundle");
  auto* run_all_cmd =
      app.add_subcommand("run-all", "run every stage in order");

  for (auto* cmd : {validate_cmd, schedule_cmd, elicit_cmd, aggregate_cmd,
                    fit_cmd, coherence_cmd, delphi_cmd, report_cmd,
                    run_all_cmd}) {
    cmd->add_option("-c,--config", config_path, "run configuration JSON")
        ->required()
        ->check(CLI::ExistingFile);
  }
  elicit_cmd->add_flag("--resume", resume,
                       "keep valid trials already in the log and redo the rest");
  elicit_cmd->add_flag("--dry-run", dry_run,
                       "print the schedule size and stop");
  run_all_cmd->add_flag("--resume", resume,
                        "reuse an interrupted trial log during elicitation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? 0 : 2;
  }

  try {
    const prefkit::RunConfig config = prefkit::RunConfig::load(config_path);

    if (app.got_subcommand(validate_cmd)) return do_validate(config);
    require_valid(config);

    if (app.got_subcommand(schedule_cmd)) {
      prefkit::stage_schedule(config);
      const auto size = prefkit::schedule_size(config);
      std::printf("schedule: %zu pairs, %zu trials -> %s\n", size.pairs,
                  size.trials, prefkit::stage_paths(config).schedule.c_str());
    } else if (app.got_subcommand(elicit_cmd)) {
      if (dry_run) {
        const auto size = prefkit::schedule_size(config);
        std::printf("%zu pairs, %zu trials\n", size.pairs, size.trials);
        return 0;
      }
      const auto summary = prefkit::stage_elicit(config, resume);
      std::printf("elicit: %zu trials, %zu valid, %zu invalid -> %s\n",
                  summary.total, summary.valid, summary.invalid,
                  prefkit::stage_paths(config).trials.c_str());
    } else if (app.got_subcommand(aggregate_cmd)) {
      prefkit::stage_aggregate(config);
      const auto paths = prefkit::stage_paths(config);
      std::printf("aggregate: %s, %s, %s\n", paths.matrix_json.c_str(),
                  paths.matrix_csv.c_str(), paths.order_effects.c_str());
    } else if (app.got_subcommand(fit_cmd)) {
      prefkit::stage_fit(config);
      std::printf("fit: %s\n", prefkit::stage_paths(config).model.c_str());
    } else if (app.got_subcommand(coherence_cmd)) {
      prefkit::stage_coherence(config);
      std::printf("coherence: %s\n",
                  prefkit::stage_paths(config).coherence.c_str());
    } else if (app.got_subcommand(delphi_cmd)) {
      prefkit::stage_delphi(config);
      std::printf("delphi: %s\n", prefkit::stage_paths(config).delphi.c_str());
    } else if (app.got_subcommand(report_cmd)) {
      prefkit::stage_report(config);
      std::printf("report: %s\n",
                  prefkit::stage_paths(config).report_dir.c_str());
    } else if (app.got_subcommand(run_all_cmd)) {
      prefkit::run_all(config, resume);
      std::printf("run-all: %s\n",
                  prefkit::stage_paths(config).report_dir.c_str());
    }
    return 0;
  } catch (const prefkit::ConfigError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const prefkit::Error& e) {
    emit_error("runtime", e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 1;
  }
}
