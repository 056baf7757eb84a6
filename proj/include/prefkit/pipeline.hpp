#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "prefkit/config.hpp"
#include "prefkit/elicitation.hpp"

namespace prefkit {

// Pipeline stages behind the CLI subcommands. Stages communicate through
// files under config.output_dir so each can be run, inspected and rerun in
// isolation; run_all() is nothing more than the stages in order.

struct StagePaths {
  std::string schedule;       // schedule.json
  std::string trials;         // trials.jsonl (durable elicitation log)
  std::string matrix_json;    // matrix.json
  std::string matrix_csv;     // matrix.csv
  std::string order_effects;  // order_effects.json
  std::string model;          // model.json
  std::string coherence;      // coherence.json
  std::string delphi;         // delphi.json
  std::string report_dir;     // report bundle destination
};

StagePaths stage_paths(const RunConfig& config);

// Loads the corpus in strict mode (throws on any structural violation).
ScenarioSet load_corpus(const RunConfig& config);

std::unique_ptr<RespondentBackend> make_backend(const RunConfig& config);

// Schedule artifact io. Reading verifies the stored corpus digest against
// the file the config points at, so a stale schedule cannot be replayed
// against a different corpus.
void write_schedule(const std::string& path, const RunConfig& config,
                    const std::vector<TrialSpec>& schedule);
std::vector<TrialSpec> read_schedule(const std::string& path,
                                     const RunConfig& config);

struct ScheduleSize {
  std::size_t pairs = 0;
  std::size_t trials = 0;
};
// Pair/trial counts without materializing anything (for --dry-run).
ScheduleSize schedule_size(const RunConfig& config);

struct ElicitSummary {
  std::size_t total = 0;
  std::size_t valid = 0;
  std::size_t invalid = 0;
};

void stage_schedule(const RunConfig& config);
ElicitSummary stage_elicit(const RunConfig& config, bool resume);
void stage_aggregate(const RunConfig& config);
void stage_fit(const RunConfig& config);
void stage_coherence(const RunConfig& config);
void stage_delphi(const RunConfig& config);
// Assembles and exports the full bundle; recomputes coherence and panel
// statistics from the matrix/model artifacts (deterministic, so the result
// matches the standalone stages byte for byte).
void stage_report(const RunConfig& config);
void run_all(const RunConfig& config, bool resume);

}  // namespace prefkit
