#include "prefkit/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "prefkit/common.hpp"
#include "prefkit/csv.hpp"

namespace prefkit {

PreferenceMatrix::PreferenceMatrix(std::vector<std::string> options)
    : options_(std::move(options)) {
  if (options_.size() < 2)
    throw DataError("preference matrix needs at least 2 options");
  for (std::size_t i = 0; i < options_.size(); ++i) {
    if (!index_.emplace(options_[i], i).second)
      throw DataError("preference matrix: duplicate option '" + options_[i] +
                      "'");
  }
  const std::size_t n = options_.size();
  wins_.assign(n * n, 0);
  attempted_.assign(n * (n - 1) / 2, 0);
  order_splits_.assign(n * (n - 1) / 2, OrderSplit{});
}

std::size_t PreferenceMatrix::index_of(const std::string& option) const {
  auto it = index_.find(option);
  if (it == index_.end())
    throw DataError("preference matrix: unknown option '" + option + "'");
  return it->second;
}

std::size_t PreferenceMatrix::cell(std::size_t x, std::size_t y) const {
  if (x >= size() || y >= size())
    throw DataError("preference matrix: index out of range");
  return x * size() + y;
}

std::size_t PreferenceMatrix::pair_rank(std::size_t x, std::size_t y) const {
  if (x == y || x >= size() || y >= size())
    throw DataError("preference matrix: bad pair index");
  const std::size_t a = std::min(x, y), b = std::max(x, y);
  // Rank of (a,b) in row-major upper-triangle order.
  return a * (2 * size() - a - 1) / 2 + (b - a - 1);
}

int PreferenceMatrix::wins(std::size_t x, std::size_t y) const {
  return wins_[cell(x, y)];
}

int PreferenceMatrix::trials(std::size_t x, std::size_t y) const {
  return wins_[cell(x, y)] + wins_[cell(y, x)];
}

int PreferenceMatrix::attempted(std::size_t x, std::size_t y) const {
  return attempted_[pair_rank(x, y)];
}

const OrderSplit& PreferenceMatrix::order_split(std::size_t x,
                                                std::size_t y) const {
  return order_splits_[pair_rank(x, y)];
}

double PreferenceMatrix::prob(std::size_t x, std::size_t y) const {
  if (x == y) return 0.5;
  const int n = trials(x, y);
  if (n == 0)
    throw DataError("preference matrix: no valid trials for pair (" +
                    options_[x] + ", " + options_[y] + ")");
  return static_cast<double>(wins(x, y)) / n;
}

bool PreferenceMatrix::has_data(std::size_t x, std::size_t y) const {
  return x != y && trials(x, y) > 0;
}

bool PreferenceMatrix::low_count(std::size_t x, std::size_t y) const {
  const int n = trials(x, y);
  return n > 0 && n < attempted(x, y);
}

bool PreferenceMatrix::tie(std::size_t x, std::size_t y) const {
  return has_data(x, y) && 2 * wins(x, y) == trials(x, y);
}

bool PreferenceMatrix::strictly_prefers(std::size_t x, std::size_t y) const {
  return has_data(x, y) && 2 * wins(x, y) > trials(x, y);
}

void PreferenceMatrix::add_outcome(std::size_t x, std::size_t y, bool x_chosen,
                                   Order order) {
  if (x == y) throw DataError("preference matrix: self-pair outcome");
  ++wins_[cell(x_chosen ? x : y, x_chosen ? y : x)];
  auto& split = order_splits_[pair_rank(x, y)];
  const bool first_chosen = x_chosen == (x < y);
  if (order == Order::AB) {
    ++split.ab_valid;
    split.ab_first_wins += first_chosen ? 1 : 0;
  } else {
    ++split.ba_valid;
    split.ba_first_wins += first_chosen ? 1 : 0;
  }
}

void PreferenceMatrix::note_attempt(std::size_t x, std::size_t y,
                                    Order order) {
  ++attempted_[pair_rank(x, y)];
  auto& split = order_splits_[pair_rank(x, y)];
  ++(order == Order::AB ? split.ab_attempted : split.ba_attempted);
}

void PreferenceMatrix::set_pair(std::size_t x, std::size_t y, int wins_x,
                                int n_trials) {
  if (x == y) throw DataError("preference matrix: self-pair");
  if (wins_x < 0 || n_trials < 0 || wins_x > n_trials)
    throw DataError("preference matrix: need 0 <= wins <= trials");
  wins_[cell(x, y)] = wins_x;
  wins_[cell(y, x)] = n_trials - wins_x;
  attempted_[pair_rank(x, y)] = n_trials;
  auto& split = order_splits_[pair_rank(x, y)];
  split = OrderSplit{};
  split.ab_valid = n_trials;
  split.ab_attempted = n_trials;
  split.ab_first_wins = x < y ? wins_x : n_trials - wins_x;
}

nlohmann::ordered_json PreferenceMatrix::to_json() const {
  nlohmann::ordered_json j;
  j["options"] = options_;
  auto& pairs = j["pairs"] = nlohmann::ordered_json::array();
  for (std::size_t x = 0; x < size(); ++x) {
    for (std::size_t y = x + 1; y < size(); ++y) {
      if (attempted(x, y) == 0 && trials(x, y) == 0) continue;
      const auto& split = order_split(x, y);
      nlohmann::ordered_json p;
      p["x"] = options_[x];
      p["y"] = options_[y];
      p["wins_x"] = wins(x, y);
      p["wins_y"] = wins(y, x);
      p["ab_valid"] = split.ab_valid;
      p["ab_first_wins"] = split.ab_first_wins;
      p["ba_valid"] = split.ba_valid;
      p["ba_first_wins"] = split.ba_first_wins;
      p["ab_attempted"] = split.ab_attempted;
      p["ba_attempted"] = split.ba_attempted;
      pairs.push_back(std::move(p));
    }
  }
  return j;
}

PreferenceMatrix PreferenceMatrix::from_json(const nlohmann::json& j) {
  PreferenceMatrix m(j.at("options").get<std::vector<std::string>>());
  for (const auto& p : j.at("pairs")) {
    const std::size_t x = m.index_of(p.at("x").get<std::string>());
    const std::size_t y = m.index_of(p.at("y").get<std::string>());
    if (x == y) throw DataError("preference matrix JSON: self-pair");
    m.wins_[m.cell(x, y)] = p.at("wins_x").get<int>();
    m.wins_[m.cell(y, x)] = p.at("wins_y").get<int>();
    auto& split = m.order_splits_[m.pair_rank(x, y)];
    split.ab_valid = p.value("ab_valid", 0);
    split.ab_first_wins = p.value("ab_first_wins", 0);
    split.ba_valid = p.value("ba_valid", 0);
    split.ba_first_wins = p.value("ba_first_wins", 0);
    split.ab_attempted = p.value("ab_attempted", split.ab_valid);
    split.ba_attempted = p.value("ba_attempted", split.ba_valid);
    m.attempted_[m.pair_rank(x, y)] =
        split.ab_attempted + split.ba_attempted;
  }
  return m;
}

std::string PreferenceMatrix::to_csv() const {
  std::ostringstream out;
  out << "x,y,wins,trials,p\n";
  for (std::size_t x = 0; x < size(); ++x) {
    for (std::size_t y = x + 1; y < size(); ++y) {
      const int n = trials(x, y);
      if (n == 0) continue;
      csv::write_row(out,
                     {options_[x], options_[y], std::to_string(wins(x, y)),
                      std::to_string(n), nlohmann::json(prob(x, y)).dump()});
    }
  }
  return out.str();
}

PreferenceMatrix PreferenceMatrix::from_csv(const std::string& source) {
  auto rows = csv::read_all(source);
  if (rows.empty()) throw DataError("preference matrix CSV: empty input");
  const std::vector<std::string> header = {"x", "y", "wins", "trials", "p"};
  if (rows[0].fields != header)
    throw DataError("preference matrix CSV: expected header x,y,wins,trials,p");

  // Options appear in row order; collect them before building the matrix.
  std::vector<std::string> options;
  std::unordered_map<std::string, std::size_t> seen;
  auto note = [&](const std::string& name) {
    if (seen.emplace(name, options.size()).second) options.push_back(name);
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].fields.size() != 5)
      throw DataError("preference matrix CSV line " +
                      std::to_string(rows[r].line) + ": expected 5 fields");
    note(rows[r].fields[0]);
    note(rows[r].fields[1]);
  }
  PreferenceMatrix m(options);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    int w = 0, n = 0;
    try {
      w = std::stoi(f[2]);
      n = std::stoi(f[3]);
    } catch (const std::exception&) {
      throw DataError("preference matrix CSV line " +
                      std::to_string(rows[r].line) + ": bad count");
    }
    const std::size_t x = m.index_of(f[0]);
    const std::size_t y = m.index_of(f[1]);
    if (m.trials(x, y) > 0)
      throw DataError("preference matrix CSV line " +
                      std::to_string(rows[r].line) + ": duplicate pair");
    m.set_pair(x, y, w, n);
  }
  return m;
}

void PreferenceMatrix::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write preference matrix: " + path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    out << to_csv();
  else
    out << to_json().dump(2) << '\n';
  if (!out) throw Error("failed writing preference matrix: " + path);
}

PreferenceMatrix PreferenceMatrix::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open preference matrix: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    return from_csv(text);
  return from_json(nlohmann::json::parse(text));
}

PreferenceMatrix aggregate(const std::vector<ComparisonRecord>& records,
                           const ScenarioSet& set) {
  std::vector<std::string> options;
  options.reserve(set.size());
  for (const auto& s : set.scenarios()) options.push_back(s.scenario_id);
  PreferenceMatrix m(options);

  for (const auto& rec : records) {
    std::size_t x = set.index_of(rec.pair.first);
    std::size_t y = set.index_of(rec.pair.second);
    if (x == y)
      throw DataError("trial " + rec.trial_id + ": self-pair record");
    // Records are produced in canonical orientation, but imported logs may
    // not be; normalize so `order` stays relative to corpus order.
    ParsedChoice parsed = rec.parsed;
    Order order = rec.order;
    if (x > y) {
      std::swap(x, y);
      if (parsed == ParsedChoice::ChoseX)
        parsed = ParsedChoice::ChoseY;
      else if (parsed == ParsedChoice::ChoseY)
        parsed = ParsedChoice::ChoseX;
      order = order == Order::AB ? Order::BA : Order::AB;
    }
    m.note_attempt(x, y, order);
    if (parsed != ParsedChoice::Invalid)
      m.add_outcome(x, y, parsed == ParsedChoice::ChoseX, order);
  }
  return m;
}

OrderEffectReport order_effect_report(const PreferenceMatrix& matrix) {
  OrderEffectReport report;
  double gap_sum = 0.0;
  for (std::size_t x = 0; x < matrix.size(); ++x) {
    for (std::size_t y = x + 1; y < matrix.size(); ++y) {
      const auto& s = matrix.order_split(x, y);
      if (s.ab_valid + s.ba_valid == 0) continue;
      OrderEffectEntry e;
      e.pair = {matrix.options()[x], matrix.options()[y]};
      e.ab_valid = s.ab_valid;
      e.ba_valid = s.ba_valid;
      if (s.ab_valid > 0)
        e.first_rate_ab = static_cast<double>(s.ab_first_wins) / s.ab_valid;
      if (s.ba_valid > 0)
        e.first_rate_ba = static_cast<double>(s.ba_first_wins) / s.ba_valid;
      if (s.ab_valid > 0 && s.ba_valid > 0) {
        e.has_gap = true;
        e.gap = std::abs(e.first_rate_ab - e.first_rate_ba);
        gap_sum += e.gap;
        ++report.pairs_with_both_orders;
        // Majority winner per order, integer-exact; a flip needs a strict
        // winner under both orders on opposite sides.
        const int ab_sign = 2 * s.ab_first_wins > s.ab_valid   ? 1
                            : 2 * s.ab_first_wins < s.ab_valid ? -1
                                                               : 0;
        const int ba_sign = 2 * s.ba_first_wins > s.ba_valid   ? 1
                            : 2 * s.ba_first_wins < s.ba_valid ? -1
                                                               : 0;
        e.flips = ab_sign != 0 && ba_sign != 0 && ab_sign != ba_sign;
        report.flip_count += e.flips ? 1 : 0;
      }
      report.entries.push_back(std::move(e));
    }
  }
  if (report.pairs_with_both_orders > 0)
    report.mean_gap = gap_sum / report.pairs_with_both_orders;
  return report;
}

nlohmann::ordered_json OrderEffectReport::to_json() const {
  nlohmann::ordered_json j;
  j["pairs_with_both_orders"] = pairs_with_both_orders;
  j["flip_count"] = flip_count;
  j["mean_gap"] = mean_gap;
  auto& list = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json p;
    p["x"] = e.pair.first;
    p["y"] = e.pair.second;
    p["ab_valid"] = e.ab_valid;
    p["ba_valid"] = e.ba_valid;
    p["first_rate_ab"] = e.first_rate_ab;
    p["first_rate_ba"] = e.first_rate_ba;
    if (e.has_gap) p["gap"] = e.gap;
    p["flips"] = e.flips;
    list.push_back(std::move(p));
  }
  return j;
}

}  // namespace prefkit
