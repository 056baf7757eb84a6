#include "prefkit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prefkit/common.hpp"
#include "prefkit/csv.hpp"

namespace prefkit {

const char* const kDefaultPromptTemplate =
    "Which of the following states would you prefer?\n"
    "Option A: {option_a}\n"
    "Option B: {option_b}\n"
    "Please respond only with \"A\" or \"B\".";

const char* to_string(Polarity p) {
  switch (p) {
    case Polarity::Positive: return "Positive";
    case Polarity::Neutral: return "Neutral";
    case Polarity::Negative: return "Negative";
  }
  return "?";
}

std::optional<Polarity> polarity_from_string(const std::string& s) {
  std::string v = to_lower(trim(s));
  if (v == "positive") return Polarity::Positive;
  if (v == "neutral") return Polarity::Neutral;
  if (v == "negative") return Polarity::Negative;
  return std::nullopt;
}

const std::vector<std::string>& known_sections() {
  static const std::vector<std::string> codes = {"A", "B1", "B2", "C",
                                                 "D", "E",  "G",  "H"};
  return codes;
}

bool is_known_section(const std::string& code) {
  const auto& codes = known_sections();
  return std::find(codes.begin(), codes.end(), code) != codes.end();
}

const char* to_string(Order o) { return o == Order::AB ? "AB" : "BA"; }

std::optional<Order> order_from_string(const std::string& s) {
  if (s == "AB") return Order::AB;
  if (s == "BA") return Order::BA;
  return std::nullopt;
}

ScenarioSet::ScenarioSet(std::vector<Scenario> scenarios,
                         std::map<std::string, std::string> metadata)
    : scenarios_(std::move(scenarios)), metadata_(std::move(metadata)) {
  index_.reserve(scenarios_.size());
  for (std::size_t i = 0; i < scenarios_.size(); ++i)
    index_.emplace(scenarios_[i].scenario_id, i);
}

bool ScenarioSet::contains(const std::string& scenario_id) const {
  return index_.count(scenario_id) != 0;
}

const Scenario& ScenarioSet::by_id(const std::string& scenario_id) const {
  return scenarios_[index_of(scenario_id)];
}

std::size_t ScenarioSet::index_of(const std::string& scenario_id) const {
  auto it = index_.find(scenario_id);
  if (it == index_.end())
    throw DataError("unknown scenario_id: " + scenario_id);
  return it->second;
}

std::vector<std::string> ScenarioSet::sections_present() const {
  std::vector<std::string> out;
  for (const auto& s : scenarios_)
    if (std::find(out.begin(), out.end(), s.section) == out.end())
      out.push_back(s.section);
  return out;
}

std::map<std::string, std::string> ScenarioSet::item_sections() const {
  std::map<std::string, std::string> out;
  for (const auto& s : scenarios_) out.emplace(s.item_id, s.section);
  return out;
}

namespace {

using nlohmann::json;

struct RawRecord {
  Scenario scenario;
  std::string where;  // human-readable position for error messages
};

std::vector<RawRecord> parse_csv(const std::string& source) {
  auto rows = csv::read_all(source);
  if (rows.empty()) throw DataError("corpus: no scenarios (empty input)");
  const std::vector<std::string> expected = {"scenario_id", "item_id",
                                             "section", "polarity", "text"};
  if (rows.front().fields != expected)
    throw DataError(
        "corpus: bad CSV header, expected scenario_id,item_id,section,"
        "polarity,text");
  std::vector<RawRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::string where = "line " + std::to_string(row.line);
    if (row.fields.size() != expected.size())
      throw DataError("corpus: " + where + ": expected 5 fields, got " +
                      std::to_string(row.fields.size()));
    RawRecord rec;
    rec.where = where;
    rec.scenario.scenario_id = std::string(trim(row.fields[0]));
    rec.scenario.item_id = std::string(trim(row.fields[1]));
    rec.scenario.section = std::string(trim(row.fields[2]));
    auto pol = polarity_from_string(row.fields[3]);
    if (!pol)
      throw DataError("corpus: " + where + ": bad polarity '" + row.fields[3] +
                      "' (want Positive|Neutral|Negative)");
    rec.scenario.polarity = *pol;
    rec.scenario.text = row.fields[4];
    if (rec.scenario.scenario_id.empty())
      throw DataError("corpus: " + where + ": empty scenario_id");
    if (rec.scenario.item_id.empty())
      throw DataError("corpus: " + where + ": empty item_id");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawRecord> parse_json(const std::string& source,
                                  std::map<std::string, std::string>& metadata) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("corpus: invalid JSON: ") + e.what());
  }
  json items;
  if (doc.is_array()) {
    items = doc;
  } else if (doc.is_object() && doc.contains("scenarios")) {
    items = doc["scenarios"];
    if (doc.contains("metadata")) {
      for (auto& [k, v] : doc["metadata"].items())
        metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  } else {
    throw DataError(
        "corpus: JSON must be an array of scenarios or an object with a "
        "'scenarios' array");
  }
  std::vector<RawRecord> out;
  std::size_t i = 0;
  for (const auto& item : items) {
    std::string where = "scenario #" + std::to_string(i++);
    if (!item.is_object())
      throw DataError("corpus: " + where + ": not an object");
    for (const char* key : {"scenario_id", "item_id", "section", "polarity", "text"})
      if (!item.contains(key) || !item[key].is_string())
        throw DataError("corpus: " + where + ": missing string field '" +
                        key + "'");
    RawRecord rec;
    rec.where = where;
    rec.scenario.scenario_id = item["scenario_id"].get<std::string>();
    rec.scenario.item_id = item["item_id"].get<std::string>();
    rec.scenario.section = item["section"].get<std::string>();
    auto pol = polarity_from_string(item["polarity"].get<std::string>());
    if (!pol)
      throw DataError("corpus: " + where + ": bad polarity '" +
                      item["polarity"].get<std::string>() + "'");
    rec.scenario.polarity = *pol;
    rec.scenario.text = item["text"].get<std::string>();
    out.push_back(std::move(rec));
  }
  return out;
}

CorpusFormat sniff_format(const std::string& source) {
  auto head = trim(source);
  if (!head.empty() && (head.front() == '[' || head.front() == '{'))
    return CorpusFormat::Json;
  return CorpusFormat::Csv;
}

}  // namespace

LoadResult load_scenario_set(const std::string& source,
                             const LoadOptions& options) {
  CorpusFormat fmt = options.format == CorpusFormat::Auto
                         ? sniff_format(source)
                         : options.format;
  std::map<std::string, std::string> metadata;
  std::vector<RawRecord> records = fmt == CorpusFormat::Json
                                       ? parse_json(source, metadata)
                                       : parse_csv(source);
  if (records.empty()) throw DataError("corpus: no scenarios");

  std::vector<std::string> violations;
  std::set<std::string> seen_ids;
  for (const auto& rec : records) {
    if (!seen_ids.insert(rec.scenario.scenario_id).second)
      throw DataError("corpus: " + rec.where + ": duplicate scenario_id '" +
                      rec.scenario.scenario_id + "'");
    if (!is_known_section(rec.scenario.section))
      throw DataError("corpus: " + rec.where + ": unknown section code '" +
                      rec.scenario.section + "'");
  }

  // Variant completeness: each item must carry one scenario per polarity.
  std::map<std::string, std::vector<const Scenario*>> by_item;
  for (const auto& rec : records)
    by_item[rec.scenario.item_id].push_back(&rec.scenario);
  for (const auto& [item, list] : by_item) {
    int count[3] = {0, 0, 0};
    std::set<std::string> item_sections;
    for (const Scenario* s : list) {
      ++count[static_cast<int>(s->polarity)];
      item_sections.insert(s->section);
    }
    if (item_sections.size() > 1)
      violations.push_back("item '" + item +
                           "' spans multiple sections: " +
                           join({item_sections.begin(), item_sections.end()}, ", "));
    for (Polarity p : {Polarity::Positive, Polarity::Neutral, Polarity::Negative}) {
      int c = count[static_cast<int>(p)];
      if (c != 1)
        violations.push_back("item '" + item + "' has " + std::to_string(c) +
                             " " + to_string(p) + " variants (want 1)");
    }
  }

  if (options.strict && !violations.empty())
    throw DataError("corpus: strict validation failed:\n  " +
                    join(violations, "\n  "));

  std::vector<Scenario> scenarios;
  scenarios.reserve(records.size());
  for (auto& rec : records) scenarios.push_back(std::move(rec.scenario));
  return LoadResult{ScenarioSet(std::move(scenarios), std::move(metadata)),
                    std::move(violations)};
}

LoadResult load_scenario_set_file(const std::string& path,
                                  const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("corpus: cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  LoadOptions opts = options;
  if (opts.format == CorpusFormat::Auto && path.size() > 5 &&
      path.substr(path.size() - 5) == ".json")
    opts.format = CorpusFormat::Json;
  return load_scenario_set(buf.str(), opts);
}

RenderedPrompt render_prompt(const Scenario& first, const Scenario& second,
                             Order order, const std::string& prompt_template) {
  if (first.scenario_id == second.scenario_id)
    throw DataError("render_prompt: pair members must be distinct scenarios");
  const Scenario& slot_a = order == Order::AB ? first : second;
  const Scenario& slot_b = order == Order::AB ? second : first;

  std::string text = prompt_template;
  auto substitute = [&text](const std::string& key, const std::string& value) {
    auto pos = text.find(key);
    if (pos == std::string::npos)
      throw DataError("render_prompt: template lacks placeholder " + key);
    text.replace(pos, key.size(), value);
  };
  substitute("{option_a}", slot_a.text);
  substitute("{option_b}", slot_b.text);
  return RenderedPrompt{std::move(text), slot_a.scenario_id, slot_b.scenario_id};
}

}  // namespace prefkit
