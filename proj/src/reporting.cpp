#include "prefkit/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "prefkit/common.hpp"
#include "prefkit/csv.hpp"
#include "prefkit/digest.hpp"

namespace fs = std::filesystem;

namespace prefkit {

const char* to_string(WinRateScope s) {
  return s == WinRateScope::AllOpponents ? "AllOpponents" : "CrossSectionOnly";
}

std::optional<WinRateScope> win_rate_scope_from_string(const std::string& s) {
  if (s == "AllOpponents") return WinRateScope::AllOpponents;
  if (s == "CrossSectionOnly") return WinRateScope::CrossSectionOnly;
  return std::nullopt;
}

std::vector<RankedOption> utility_ranking(const UtilityModel& model,
                                          const ScenarioSet& set) {
  std::vector<RankedOption> out;
  out.reserve(set.size());
  for (const auto& s : set.scenarios()) {
    const std::size_t i = model.index_of(s.scenario_id);
    RankedOption r;
    r.scenario_id = s.scenario_id;
    r.section = s.section;
    r.mu = model.mu()[i];
    r.sigma = model.sigma()[i];
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const RankedOption& a, const RankedOption& b) {
              if (a.mu != b.mu) return a.mu > b.mu;
              return a.scenario_id < b.scenario_id;
            });
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].rank = static_cast<int>(i) + 1;
  return out;
}

std::vector<ScenarioWinRate> scenario_win_rates(const PreferenceMatrix& matrix,
                                                const ScenarioSet& set,
                                                WinRateScope scope) {
  const auto& scenarios = set.scenarios();
  std::vector<ScenarioWinRate> out;
  out.reserve(scenarios.size());
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const std::size_t si = matrix.index_of(scenarios[i].scenario_id);
    ScenarioWinRate r;
    r.scenario_id = scenarios[i].scenario_id;
    r.section = scenarios[i].section;
    double sum = 0.0;
    for (std::size_t j = 0; j < scenarios.size(); ++j) {
      if (j == i) continue;
      if (scope == WinRateScope::CrossSectionOnly &&
          scenarios[j].section == scenarios[i].section)
        continue;
      const std::size_t sj = matrix.index_of(scenarios[j].scenario_id);
      if (!matrix.has_data(si, sj)) continue;
      sum += matrix.prob(si, sj);
      ++r.opponents;
    }
    if (r.opponents == 0)
      throw DataError("win rates: scenario '" + r.scenario_id +
                      "' has no comparable opponents under scope " +
                      to_string(scope));
    r.win_rate = sum / r.opponents;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SectionWinRate> section_win_rates(const PreferenceMatrix& matrix,
                                              const ScenarioSet& set,
                                              WinRateScope scope) {
  std::map<std::string, std::pair<double, int>> sums;
  for (const auto& r : scenario_win_rates(matrix, set, scope)) {
    auto& [sum, count] = sums[r.section];
    sum += r.win_rate;
    ++count;
  }
  std::vector<SectionWinRate> out;
  for (const auto& [section, sc] : sums) {
    SectionWinRate s;
    s.section = section;
    s.scenario_count = sc.second;
    s.mean_win_rate = sc.first / sc.second;
    s.scope = scope;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<AlignmentRow> alignment_table(
    const std::vector<SectionSummary>& expert_sections,
    const std::vector<SectionWinRate>& rates,
    const std::vector<RankedOption>& ranking) {
  std::set<std::string> expert_codes, model_codes;
  std::map<std::string, const SectionSummary*> experts;
  for (const auto& s : expert_sections) {
    expert_codes.insert(s.section);
    experts[s.section] = &s;
  }
  for (const auto& r : rates) model_codes.insert(r.section);
  if (expert_codes != model_codes) {
    std::vector<std::string> e(expert_codes.begin(), expert_codes.end());
    std::vector<std::string> m(model_codes.begin(), model_codes.end());
    throw DataError("alignment: section codes differ (expert: {" +
                    join(e, ",") + "}, model: {" + join(m, ",") + "})");
  }

  std::map<std::string, std::pair<double, int>> mu_sums;
  for (const auto& r : ranking) {
    auto& [sum, count] = mu_sums[r.section];
    sum += r.mu;
    ++count;
  }

  std::vector<AlignmentRow> rows;
  for (const auto& r : rates) {
    const SectionSummary& e = *experts.at(r.section);
    AlignmentRow row;
    row.section = r.section;
    row.win_rate = r.mean_win_rate;
    row.scenario_count = r.scenario_count;
    row.consensus_count = e.consensus_count;
    row.dissent_count = e.dissent_count;
    row.dissent_leaning = e.dissent_count > e.consensus_count;
    auto it = mu_sums.find(r.section);
    if (it != mu_sums.end()) row.mean_mu = it->second.first / it->second.second;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(),
            [](const AlignmentRow& a, const AlignmentRow& b) {
              if (a.win_rate != b.win_rate) return a.win_rate > b.win_rate;
              return a.section < b.section;
            });

  // Terciles by rank in the sorted order; top and bottom take ceil(S/3)
  // sections each (for S < 3 a section can be both — Top wins the label).
  const std::size_t s = rows.size();
  const std::size_t k = (s + 2) / 3;
  for (std::size_t i = 0; i < s; ++i) {
    rows[i].tercile = i < k ? "Top" : i >= s - k ? "Bottom" : "Middle";
    rows[i].flagged = rows[i].dissent_leaning && rows[i].tercile != "Middle";
  }
  return rows;
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

nlohmann::ordered_json section_rate_json(const SectionWinRate& s) {
  return {{"section", s.section},
          {"scope", to_string(s.scope)},
          {"scenario_count", s.scenario_count},
          {"mean_win_rate", s.mean_win_rate}};
}

nlohmann::ordered_json scenario_rate_json(const ScenarioWinRate& r,
                                          WinRateScope scope) {
  return {{"scenario_id", r.scenario_id},
          {"section", r.section},
          {"scope", to_string(scope)},
          {"opponents", r.opponents},
          {"win_rate", r.win_rate}};
}

}  // namespace

nlohmann::ordered_json ReportBundle::to_json() const {
  nlohmann::ordered_json j;
  j["config"] = config_echo;
  j["seeds"] = seeds;
  j["inputs"] = input_digests;

  auto& utils = j["utilities"] = nlohmann::ordered_json::array();
  for (const auto& u : utilities)
    utils.push_back({{"rank", u.rank},
                     {"scenario_id", u.scenario_id},
                     {"section", u.section},
                     {"mu", u.mu},
                     {"sigma", u.sigma}});

  nlohmann::ordered_json rates;
  auto& sections = rates["sections"] = nlohmann::ordered_json::array();
  for (const auto& s : section_rates_all) sections.push_back(section_rate_json(s));
  for (const auto& s : section_rates_cross)
    sections.push_back(section_rate_json(s));
  auto& scenarios = rates["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& r : scenario_rates_all)
    scenarios.push_back(scenario_rate_json(r, WinRateScope::AllOpponents));
  for (const auto& r : scenario_rates_cross)
    scenarios.push_back(scenario_rate_json(r, WinRateScope::CrossSectionOnly));
  j["win_rates"] = std::move(rates);

  auto& align = j["alignment"] = nlohmann::ordered_json::array();
  for (const auto& a : alignment)
    align.push_back({{"section", a.section},
                     {"win_rate", a.win_rate},
                     {"scenario_count", a.scenario_count},
                     {"consensus", a.consensus_count},
                     {"dissent", a.dissent_count},
                     {"mean_mu", a.mean_mu},
                     {"tercile", a.tercile},
                     {"dissent_leaning", a.dissent_leaning},
                     {"flagged", a.flagged}});

  j["coherence"] = coherence.to_json();
  j["delphi"] = delphi;
  return j;
}

std::vector<std::string> export_report(const ReportBundle& bundle,
                                       const std::string& destination_dir) {
  std::error_code ec;
  fs::create_directories(destination_dir, ec);
  if (ec)
    throw Error("report destination is not writable: " + destination_dir +
                " (" + ec.message() + ")");

  // Render everything up front so a failure cannot leave half-written text.
  std::ostringstream utilities_csv;
  utilities_csv << "rank,scenario_id,section,mu,sigma\n";
  for (const auto& u : bundle.utilities)
    csv::write_row(utilities_csv,
                   {std::to_string(u.rank), u.scenario_id, u.section,
                    fixed4(u.mu), fixed4(u.sigma)});

  std::ostringstream win_rates_csv;
  win_rates_csv << "scope,section,scenario_count,mean_win_rate\n";
  for (const auto* list : {&bundle.section_rates_all,
                           &bundle.section_rates_cross}) {
    for (const auto& s : *list)
      csv::write_row(win_rates_csv,
                     {to_string(s.scope), s.section,
                      std::to_string(s.scenario_count),
                      fixed4(s.mean_win_rate)});
  }

  const std::vector<std::pair<std::string, std::string>> files = {
      {"report.json", bundle.to_json().dump(2) + "\n"},
      {"utilities.csv", utilities_csv.str()},
      {"win_rates.csv", win_rates_csv.str()},
      {"histogram.csv", histogram_csv(bundle.coherence.sharpness)},
      {"coherence.json", bundle.coherence.to_json().dump(2) + "\n"},
      {"delphi.json", bundle.delphi.dump(2) + "\n"},
  };

  std::vector<std::string> written;
  auto cleanup = [&written]() {
    for (const auto& path : written) {
      std::error_code rm;
      fs::remove(path, rm);
    }
  };

  try {
    nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
    for (const auto& [name, content] : files) {
      const std::string path = (fs::path(destination_dir) / name).string();
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error("cannot write report file: " + path);
      out << content;
      out.close();
      if (!out) throw Error("failed while writing report file: " + path);
      written.push_back(path);
      outputs[name] = sha256_hex(content);
    }
    nlohmann::ordered_json manifest;
    manifest["inputs"] = bundle.input_digests;
    manifest["seeds"] = bundle.seeds;
    manifest["config"] = bundle.config_echo;
    manifest["outputs"] = std::move(outputs);
    const std::string mpath =
        (fs::path(destination_dir) / "manifest.json").string();
    std::ofstream mout(mpath, std::ios::binary);
    if (!mout) throw Error("cannot write report file: " + mpath);
    mout << manifest.dump(2) << '\n';
    mout.close();
    if (!mout) throw Error("failed while writing report file: " + mpath);
    written.push_back(mpath);
  } catch (...) {
    cleanup();
    throw;
  }
  return written;
}

}  // namespace prefkit
