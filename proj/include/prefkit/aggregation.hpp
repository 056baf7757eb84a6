#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "prefkit/corpus.hpp"
#include "prefkit/elicitation.hpp"

namespace prefkit {

// Win counts for one unordered pair split by presentation order. "first"
// means the pair's canonical first member (lower corpus index).
struct OrderSplit {
  int ab_valid = 0;
  int ab_first_wins = 0;
  int ba_valid = 0;
  int ba_first_wins = 0;
  int ab_attempted = 0;
  int ba_attempted = 0;
};

// Empirical preference matrix. Counts are the primary representation; the
// probabilities P(x beats y) = wins/trials are derived on demand so that the
// complement identity P(x,y) + P(y,x) = 1 and grid membership hold exactly.
class PreferenceMatrix {
 public:
  PreferenceMatrix() = default;
  explicit PreferenceMatrix(std::vector<std::string> options);

  const std::vector<std::string>& options() const { return options_; }
  std::size_t size() const { return options_.size(); }
  std::size_t index_of(const std::string& option) const;  // throws DataError

  // Valid-trial outcomes for the ordered cell (x beat y). trials() and
  // attempted() are symmetric; wins(x,y) + wins(y,x) == trials(x,y).
  int wins(std::size_t x, std::size_t y) const;
  int trials(std::size_t x, std::size_t y) const;
  int attempted(std::size_t x, std::size_t y) const;
  const OrderSplit& order_split(std::size_t x, std::size_t y) const;

  // wins/trials; 0.5 on the diagonal by convention (never used downstream).
  double prob(std::size_t x, std::size_t y) const;

  // Integer-exact relations (no floating-point thresholds).
  bool has_data(std::size_t x, std::size_t y) const;  // trials > 0
  bool missing(std::size_t x, std::size_t y) const { return !has_data(x, y); }
  // Some attempted trials never produced a valid parse.
  bool low_count(std::size_t x, std::size_t y) const;
  bool tie(std::size_t x, std::size_t y) const;             // P = 0.5
  bool strictly_prefers(std::size_t x, std::size_t y) const;  // P > 0.5

  // Builder entry points. add_outcome records one valid trial; note_attempt
  // bumps the attempted counter (valid or not).
  void add_outcome(std::size_t x, std::size_t y, bool x_chosen, Order order);
  void note_attempt(std::size_t x, std::size_t y, Order order);
  // Test/import convenience: overwrite one pair's pooled counts.
  void set_pair(std::size_t x, std::size_t y, int wins_x, int n_trials);

  nlohmann::ordered_json to_json() const;
  static PreferenceMatrix from_json(const nlohmann::json& j);
  // Long-form CSV, canonical pairs only: x,y,wins,trials,p.
  std::string to_csv() const;
  static PreferenceMatrix from_csv(const std::string& source);
  void save(const std::string& path) const;  // .csv by extension, else JSON
  static PreferenceMatrix load(const std::string& path);

 private:
  std::size_t cell(std::size_t x, std::size_t y) const;
  std::size_t pair_rank(std::size_t x, std::size_t y) const;

  std::vector<std::string> options_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<int> wins_;       // N*N, wins_[x*N+y] = x beat y
  std::vector<int> attempted_;  // upper triangle by pair rank
  std::vector<OrderSplit> order_splits_;  // upper triangle by pair rank
};

// Collapses trial records into counts, pooling both presentation orders.
// Invalid parses are dropped from the valid counts but still tallied as
// attempts, which is what low_count() reports on.
PreferenceMatrix aggregate(const std::vector<ComparisonRecord>& records,
                           const ScenarioSet& set);

// Presentation-order diagnostics for one pair. first_rate_* is the win rate
// of the canonical first member under each order; gap is their absolute
// difference (position bias shows up as a large gap). flips means both
// orders have a strict majority winner and they disagree.
struct OrderEffectEntry {
  std::pair<std::string, std::string> pair;
  int ab_valid = 0;
  int ba_valid = 0;
  double first_rate_ab = 0.0;
  double first_rate_ba = 0.0;
  double gap = 0.0;
  bool has_gap = false;  // both orders observed at least once
  bool flips = false;
};

struct OrderEffectReport {
  std::vector<OrderEffectEntry> entries;  // canonical pair order
  int pairs_with_both_orders = 0;
  int flip_count = 0;
  double mean_gap = 0.0;  // over pairs with both orders

  nlohmann::ordered_json to_json() const;
};

OrderEffectReport order_effect_report(const PreferenceMatrix& matrix);

}  // namespace prefkit
