#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace prefkit {

// Scenario corpus: items operationalized as three polarity variants each,
// grouped into a closed set of section codes. Immutable after load; all
// downstream analyses address scenarios through a ScenarioSet.

enum class Polarity { Positive, Neutral, Negative };

const char* to_string(Polarity p);
std::optional<Polarity> polarity_from_string(const std::string& s);

// Closed section-code set: A, B1, B2, C, D, E, G, H.
bool is_known_section(const std::string& code);
const std::vector<std::string>& known_sections();

struct Scenario {
  std::string scenario_id;
  std::string item_id;
  std::string section;
  Polarity polarity = Polarity::Neutral;
  std::string text;
};

class ScenarioSet {
 public:
  ScenarioSet() = default;
  explicit ScenarioSet(std::vector<Scenario> scenarios,
                       std::map<std::string, std::string> metadata = {});

  const std::vector<Scenario>& scenarios() const { return scenarios_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }
  std::size_t size() const { return scenarios_.size(); }

  bool contains(const std::string& scenario_id) const;
  const Scenario& by_id(const std::string& scenario_id) const;
  // Position of a scenario in corpus order; this is the canonical ordering
  // used for pair orientation everywhere downstream.
  std::size_t index_of(const std::string& scenario_id) const;

  // Distinct sections present, in corpus order of first appearance.
  std::vector<std::string> sections_present() const;
  // item_id -> section for every item in the set.
  std::map<std::string, std::string> item_sections() const;

 private:
  std::vector<Scenario> scenarios_;
  std::map<std::string, std::string> metadata_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class CorpusFormat { Csv, Json, Auto };

struct LoadOptions {
  bool strict = true;  // strict: violations abort; relaxed: reported
  CorpusFormat format = CorpusFormat::Auto;
};

struct LoadResult {
  ScenarioSet set;
  std::vector<std::string> violations;  // nonempty only in relaxed mode
};

// Parses the corpus from CSV (header scenario_id,item_id,section,polarity,text)
// or from JSON (array of objects with the same field names, optionally wrapped
// as {"metadata": {...}, "scenarios": [...]}). Malformed records, duplicate
// ids, unknown sections and (in strict mode) items without exactly three
// polarity variants raise DataError; relaxed mode records structural
// violations instead.
LoadResult load_scenario_set(const std::string& source,
                             const LoadOptions& options = {});

LoadResult load_scenario_set_file(const std::string& path,
                                  const LoadOptions& options = {});

// Presentation slots for one trial: which scenario of the pair occupies
// Option A. AB puts the pair's first scenario into slot A.
enum class Order { AB, BA };

const char* to_string(Order o);
std::optional<Order> order_from_string(const std::string& s);

// Binary-choice template; {option_a} and {option_b} are the insertion points.
extern const char* const kDefaultPromptTemplate;

struct RenderedPrompt {
  std::string text;
  std::string slot_a_id;  // scenario shown as Option A
  std::string slot_b_id;  // scenario shown as Option B
};

// Instantiates the template for a pair in the given presentation order.
// Throws DataError if both pair members are the same scenario or the template
// lacks a placeholder.
RenderedPrompt render_prompt(const Scenario& first, const Scenario& second,
                             Order order,
                             const std::string& prompt_template = kDefaultPromptTemplate);

}  // namespace prefkit
