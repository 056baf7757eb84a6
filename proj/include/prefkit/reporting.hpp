#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefkit/aggregation.hpp"
#include "prefkit/coherence.hpp"
#include "prefkit/corpus.hpp"
#include "prefkit/delphi.hpp"
#include "prefkit/utility_model.hpp"

namespace prefkit {

// Summary artifacts: the fitted utility ranking, empirical win rates rolled
// up by section, and the expert-vs-model alignment view that joins them.

struct RankedOption {
  int rank = 0;  // 1-based, descending utility
  std::string scenario_id;
  std::string section;
  double mu = 0.0;
  double sigma = 0.0;
};

// Descending by mu; equal utilities are ordered by scenario_id so the table
// is deterministic. The model must cover every scenario in the set.
std::vector<RankedOption> utility_ranking(const UtilityModel& model,
                                          const ScenarioSet& set);

enum class WinRateScope { AllOpponents, CrossSectionOnly };
const char* to_string(WinRateScope s);
std::optional<WinRateScope> win_rate_scope_from_string(const std::string& s);

struct ScenarioWinRate {
  std::string scenario_id;
  std::string section;
  int opponents = 0;  // opponents with data under the scope
  double win_rate = 0.0;
};

struct SectionWinRate {
  std::string section;
  double mean_win_rate = 0.0;
  int scenario_count = 0;
  WinRateScope scope = WinRateScope::AllOpponents;
};

// A scenario's win rate is its mean empirical P(s beats o) over opponents
// with data; CrossSectionOnly drops same-section opponents. A scenario with
// no comparable opponent under the scope is an error.
std::vector<ScenarioWinRate> scenario_win_rates(const PreferenceMatrix& matrix,
                                                const ScenarioSet& set,
                                                WinRateScope scope);
// Section value = mean over the section's scenario win rates.
std::vector<SectionWinRate> section_win_rates(const PreferenceMatrix& matrix,
                                              const ScenarioSet& set,
                                              WinRateScope scope);

struct AlignmentRow {
  std::string section;
  double win_rate = 0.0;
  int scenario_count = 0;
  int consensus_count = 0;
  int dissent_count = 0;
  double mean_mu = 0.0;
  std::string tercile;  // Top / Middle / Bottom by win rate
  bool dissent_leaning = false;  // more dissent than consensus items
  bool flagged = false;  // dissent-leaning section at a win-rate extreme
};

// Joins expert consensus rollups with model-side win rates per section and
// flags the disagreement pattern worth a human look: a section the experts
// could not agree on that the model ranks at the top or bottom tercile.
// Throws when the two sides disagree on the section code set.
std::vector<AlignmentRow> alignment_table(
    const std::vector<SectionSummary>& expert_sections,
    const std::vector<SectionWinRate>& rates,
    const std::vector<RankedOption>& ranking);

struct ReportBundle {
  nlohmann::ordered_json config_echo;  // run configuration, may be null
  nlohmann::ordered_json seeds;        // seeds in effect, may be null
  // label -> {"path":..., "sha256":...} for every input file
  nlohmann::ordered_json input_digests = nlohmann::ordered_json::object();

  std::vector<RankedOption> utilities;
  std::vector<ScenarioWinRate> scenario_rates_all;
  std::vector<ScenarioWinRate> scenario_rates_cross;
  std::vector<SectionWinRate> section_rates_all;
  std::vector<SectionWinRate> section_rates_cross;
  std::vector<AlignmentRow> alignment;  // empty when no expert data given
  CoherenceReport coherence;
  nlohmann::ordered_json delphi;  // delphi_report output, may be null

  nlohmann::ordered_json to_json() const;
};

// Writes report.json, utilities.csv, win_rates.csv, histogram.csv,
// coherence.json, delphi.json and manifest.json into destination_dir
// (created if needed) and returns the written paths. The manifest records
// input digests, seeds, config and digests of the other outputs. On any
// failure every file written so far is removed before the error propagates.
std::vector<std::string> export_report(const ReportBundle& bundle,
                                       const std::string& destination_dir);

}  // namespace prefkit
