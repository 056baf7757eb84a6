#include "prefkit/delphi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "prefkit/common.hpp"
#include "prefkit/csv.hpp"

namespace prefkit {

const char* to_string(VariantChoice c) {
  switch (c) {
    case VariantChoice::VariantA: return "VariantA";
    case VariantChoice::VariantB: return "VariantB";
    case VariantChoice::Both: return "Both";
  }
  return "?";
}

const char* to_string(Classification c) {
  return c == Classification::Consensus ? "Consensus" : "Dissent";
}

const char* to_string(QuartileRule r) {
  return r == QuartileRule::Interpolated ? "Interpolated"
                                         : "NearestOrderStatistic";
}

std::optional<VariantChoice> variant_choice_from_string(const std::string& s) {
  const std::string low = to_lower(trim(s));
  if (low == "a" || low == "varianta") return VariantChoice::VariantA;
  if (low == "b" || low == "variantb") return VariantChoice::VariantB;
  if (low == "both") return VariantChoice::Both;
  return std::nullopt;
}

std::optional<QuartileRule> quartile_rule_from_string(const std::string& s) {
  if (s == "Interpolated") return QuartileRule::Interpolated;
  if (s == "NearestOrderStatistic") return QuartileRule::NearestOrderStatistic;
  return std::nullopt;
}

std::vector<std::string> RatingDataset::item_ids() const {
  std::set<std::string> ids;
  for (const auto& [expert, by_item] : ratings)
    for (const auto& [item, rating] : by_item) ids.insert(item);
  return {ids.begin(), ids.end()};
}

std::vector<int> RatingDataset::ratings_for(const std::string& item_id) const {
  std::vector<int> out;
  for (const auto& [expert, by_item] : ratings) {
    auto it = by_item.find(item_id);
    if (it != by_item.end()) out.push_back(it->second);
  }
  return out;
}

namespace {

int parse_int_field(const std::string& raw, std::size_t line,
                    const char* what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line) + ": " + what + " '" +
                    raw + "' is not an integer");
  }
}

std::vector<csv::Row> parse_table(const std::string& source,
                                  const std::vector<std::string>& header,
                                  const char* what) {
  auto rows = csv::read_all(source);
  if (rows.empty())
    throw DataError(std::string(what) + ": empty input");
  if (rows[0].fields != header)
    throw DataError(std::string(what) + ": expected header " +
                    join(header, ","));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].fields.size() != header.size())
      throw DataError(std::string(what) + " line " +
                      std::to_string(rows[r].line) + ": expected " +
                      std::to_string(header.size()) + " fields");
  }
  return rows;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Every expert's ranking must be a permutation of ranks 1..P over the same
// profile set.
void check_rankings(const RatingDataset& d) {
  std::set<std::string> profile_set;
  bool first = true;
  for (const auto& [expert, by_profile] : d.rankings) {
    std::set<std::string> profiles;
    std::set<int> ranks;
    for (const auto& [profile, rank] : by_profile) {
      profiles.insert(profile);
      ranks.insert(rank);
    }
    const int p = static_cast<int>(by_profile.size());
    if (static_cast<int>(ranks.size()) != p || *ranks.begin() != 1 ||
        *ranks.rbegin() != p)
      throw DataError("rankings: expert '" + expert +
                      "' does not use each rank 1.." + std::to_string(p) +
                      " exactly once");
    if (first) {
      profile_set = profiles;
      first = false;
    } else if (profiles != profile_set) {
      throw DataError("rankings: expert '" + expert +
                      "' ranks a different profile set");
    }
  }
}

double median_of(std::vector<double> values, QuartileRule rule) {
  return quantile(std::move(values), 0.5, rule);
}

}  // namespace

std::map<std::string, RatingDataset> load_ratings_csv(
    const std::string& source) {
  const auto rows =
      parse_table(source, {"round", "expert_id", "item_id", "rating"},
                  "ratings CSV");
  std::map<std::string, RatingDataset> rounds;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    const int rating = parse_int_field(f[3], rows[r].line, "rating");
    if (rating < 1 || rating > 9)
      throw DataError("ratings CSV line " + std::to_string(rows[r].line) +
                      ": rating " + f[3] + " outside [1,9]");
    auto& round = rounds[f[0]];
    round.round_id = f[0];
    if (!round.ratings[f[1]].emplace(f[2], rating).second)
      throw DataError("ratings CSV line " + std::to_string(rows[r].line) +
                      ": duplicate rating for expert '" + f[1] + "', item '" +
                      f[2] + "'");
  }
  if (rounds.empty()) throw DataError("ratings CSV: no data rows");
  return rounds;
}

std::map<std::string, RatingDataset> load_ratings_csv_file(
    const std::string& path) {
  return load_ratings_csv(slurp(path));
}

void merge_rankings_csv(std::map<std::string, RatingDataset>& rounds,
                        const std::string& source) {
  const auto rows =
      parse_table(source, {"round", "expert_id", "profile_id", "rank"},
                  "rankings CSV");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    auto it = rounds.find(f[0]);
    if (it == rounds.end()) {
      it = rounds.emplace(f[0], RatingDataset{}).first;
      it->second.round_id = f[0];
    }
    const int rank = parse_int_field(f[3], rows[r].line, "rank");
    if (rank < 1)
      throw DataError("rankings CSV line " + std::to_string(rows[r].line) +
                      ": rank must be >= 1");
    if (!it->second.rankings[f[1]].emplace(f[2], rank).second)
      throw DataError("rankings CSV line " + std::to_string(rows[r].line) +
                      ": duplicate rank entry for expert '" + f[1] +
                      "', profile '" + f[2] + "'");
  }
  for (auto& [id, round] : rounds) check_rankings(round);
}

void merge_rankings_csv_file(std::map<std::string, RatingDataset>& rounds,
                             const std::string& path) {
  merge_rankings_csv(rounds, slurp(path));
}

void merge_variants_csv(std::map<std::string, RatingDataset>& rounds,
                        const std::string& source) {
  const auto rows =
      parse_table(source, {"round", "expert_id", "pair_id", "choice"},
                  "variants CSV");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    auto choice = variant_choice_from_string(f[3]);
    if (!choice)
      throw DataError("variants CSV line " + std::to_string(rows[r].line) +
                      ": choice must be A, B or Both, got '" + f[3] + "'");
    auto it = rounds.find(f[0]);
    if (it == rounds.end()) {
      it = rounds.emplace(f[0], RatingDataset{}).first;
      it->second.round_id = f[0];
    }
    if (!it->second.variant_choices[f[1]].emplace(f[2], *choice).second)
      throw DataError("variants CSV line " + std::to_string(rows[r].line) +
                      ": duplicate choice for expert '" + f[1] + "', pair '" +
                      f[2] + "'");
  }
}

void merge_variants_csv_file(std::map<std::string, RatingDataset>& rounds,
                             const std::string& path) {
  merge_variants_csv(rounds, slurp(path));
}

double quantile(std::vector<double> values, double p, QuartileRule rule) {
  if (values.empty()) throw DataError("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("quantile: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 1) return values[0];
  if (rule == QuartileRule::NearestOrderStatistic) {
    // Rank method: smallest order statistic whose rank is >= p*n.
    const double h = p * static_cast<double>(n);
    auto rank = static_cast<std::size_t>(std::ceil(h));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return values[rank - 1];
  }
  // Linear interpolation between order statistics at position h = (n-1)p.
  // On quarter values of p the fraction is a small dyadic, so quartiles of
  // integer samples come out exact (e.g. halves).
  const double h = static_cast<double>(n - 1) * p;
  const auto lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= n) return values[n - 1];
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

Classification classify(double iqr, double top_two) {
  return iqr <= 1.0 && top_two >= 0.70 ? Classification::Consensus
                                       : Classification::Dissent;
}

ItemStats likert_stats(const RatingDataset& dataset,
                       const std::string& item_id, QuartileRule rule) {
  const std::vector<int> raw = dataset.ratings_for(item_id);
  if (raw.empty())
    throw DataError("likert_stats: no ratings for item '" + item_id + "'");
  std::vector<double> values(raw.begin(), raw.end());

  ItemStats s;
  s.item_id = item_id;
  s.n = static_cast<int>(raw.size());
  s.median = quantile(values, 0.5, rule);
  s.q1 = quantile(values, 0.25, rule);
  s.q3 = quantile(values, 0.75, rule);
  s.iqr = s.q3 - s.q1;
  int top = 0;
  for (int r : raw) top += r >= 8 ? 1 : 0;
  s.top_two = static_cast<double>(top) / s.n;
  s.classification = classify(s.iqr, s.top_two);
  return s;
}

std::vector<ItemStats> all_item_stats(const RatingDataset& dataset,
                                      QuartileRule rule) {
  std::vector<ItemStats> out;
  for (const auto& item : dataset.item_ids())
    out.push_back(likert_stats(dataset, item, rule));
  return out;
}

std::vector<SectionSummary> section_summary(
    const RatingDataset& dataset,
    const std::map<std::string, std::string>& item_sections,
    QuartileRule rule) {
  std::map<std::string, std::vector<ItemStats>> by_section;
  for (const auto& stats : all_item_stats(dataset, rule)) {
    auto it = item_sections.find(stats.item_id);
    if (it == item_sections.end())
      throw DataError("section_summary: item '" + stats.item_id +
                      "' has no section mapping");
    by_section[it->second].push_back(stats);
  }
  std::vector<SectionSummary> out;
  for (const auto& [section, items] : by_section) {
    SectionSummary s;
    s.section = section;
    s.item_count = static_cast<int>(items.size());
    std::vector<double> medians, iqrs;
    for (const auto& st : items) {
      s.consensus_count += st.classification == Classification::Consensus;
      s.dissent_count += st.classification == Classification::Dissent;
      medians.push_back(st.median);
      iqrs.push_back(st.iqr);
    }
    s.median_of_medians = median_of(std::move(medians), rule);
    s.median_of_iqrs = median_of(std::move(iqrs), rule);
    out.push_back(std::move(s));
  }
  return out;
}

double stability(const RatingDataset& round_a, const RatingDataset& round_b) {
  long long shared = 0, unchanged = 0;
  for (const auto& [expert, by_item] : round_a.ratings) {
    auto eb = round_b.ratings.find(expert);
    if (eb == round_b.ratings.end()) continue;
    for (const auto& [item, rating] : by_item) {
      auto ib = eb->second.find(item);
      if (ib == eb->second.end()) continue;
      ++shared;
      unchanged += ib->second == rating ? 1 : 0;
    }
  }
  if (shared == 0)
    throw DataError("stability: rounds share no expert/item cells");
  return static_cast<double>(unchanged) / static_cast<double>(shared);
}

std::vector<ProfileRankStats> profile_rank_stats(const RatingDataset& dataset,
                                                 QuartileRule rule) {
  if (dataset.rankings.empty())
    throw DataError("profile_rank_stats: no rankings in round '" +
                    dataset.round_id + "'");
  check_rankings(dataset);
  std::map<std::string, std::vector<double>> ranks;
  for (const auto& [expert, by_profile] : dataset.rankings)
    for (const auto& [profile, rank] : by_profile)
      ranks[profile].push_back(rank);

  const int n = static_cast<int>(dataset.rankings.size());
  const int last = static_cast<int>(ranks.size());
  std::vector<ProfileRankStats> out;
  for (const auto& [profile, values] : ranks) {
    ProfileRankStats s;
    s.profile_id = profile;
    s.n = n;
    int firsts = 0, lasts = 0;
    for (double r : values) {
      firsts += r == 1.0 ? 1 : 0;
      lasts += r == static_cast<double>(last) ? 1 : 0;
    }
    s.rank1_share = static_cast<double>(firsts) / n;
    s.last_share = static_cast<double>(lasts) / n;
    s.median_rank = median_of(std::vector<double>(values), rule);
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(),
            [](const ProfileRankStats& a, const ProfileRankStats& b) {
              if (a.median_rank != b.median_rank)
                return a.median_rank < b.median_rank;
              if (a.rank1_share != b.rank1_share)
                return a.rank1_share > b.rank1_share;
              return a.profile_id < b.profile_id;
            });
  return out;
}

VariantShares variant_distribution(const RatingDataset& dataset,
                                   const std::string& pair_id) {
  VariantShares s;
  s.pair_id = pair_id;
  int a = 0, b = 0, both = 0;
  for (const auto& [expert, by_pair] : dataset.variant_choices) {
    auto it = by_pair.find(pair_id);
    if (it == by_pair.end()) continue;
    ++s.n;
    switch (it->second) {
      case VariantChoice::VariantA: ++a; break;
      case VariantChoice::VariantB: ++b; break;
      case VariantChoice::Both: ++both; break;
    }
  }
  if (s.n == 0)
    throw DataError("variant_distribution: no choices recorded for pair '" +
                    pair_id + "'");
  s.share_a = static_cast<double>(a) / s.n;
  s.share_b = static_cast<double>(b) / s.n;
  s.share_both = static_cast<double>(both) / s.n;
  return s;
}

nlohmann::ordered_json delphi_report(
    const std::map<std::string, RatingDataset>& rounds,
    const std::map<std::string, std::string>& item_sections,
    QuartileRule rule) {
  nlohmann::ordered_json j;
  j["quartile_rule"] = to_string(rule);
  auto& rounds_json = j["rounds"] = nlohmann::ordered_json::array();
  for (const auto& [round_id, dataset] : rounds) {
    nlohmann::ordered_json rj;
    rj["round"] = round_id;
    if (!dataset.ratings.empty()) {
      auto& items = rj["items"] = nlohmann::ordered_json::array();
      for (const auto& s : all_item_stats(dataset, rule)) {
        items.push_back({{"item_id", s.item_id},
                         {"n", s.n},
                         {"median", s.median},
                         {"q1", s.q1},
                         {"q3", s.q3},
                         {"iqr", s.iqr},
                         {"top_two", s.top_two},
                         {"classification", to_string(s.classification)}});
      }
      if (!item_sections.empty()) {
        auto& sections = rj["sections"] = nlohmann::ordered_json::array();
        for (const auto& s : section_summary(dataset, item_sections, rule)) {
          sections.push_back({{"section", s.section},
                              {"items", s.item_count},
                              {"consensus", s.consensus_count},
                              {"dissent", s.dissent_count},
                              {"median_of_medians", s.median_of_medians},
                              {"median_of_iqrs", s.median_of_iqrs}});
        }
      }
    }
    if (!dataset.rankings.empty()) {
      auto& profiles = rj["profiles"] = nlohmann::ordered_json::array();
      for (const auto& p : profile_rank_stats(dataset, rule)) {
        profiles.push_back({{"profile_id", p.profile_id},
                            {"n", p.n},
                            {"rank1_share", p.rank1_share},
                            {"last_share", p.last_share},
                            {"median_rank", p.median_rank}});
      }
    }
    if (!dataset.variant_choices.empty()) {
      std::set<std::string> pair_ids;
      for (const auto& [expert, by_pair] : dataset.variant_choices)
        for (const auto& [pair, choice] : by_pair) pair_ids.insert(pair);
      auto& variants = rj["variants"] = nlohmann::ordered_json::array();
      for (const auto& pair : pair_ids) {
        const auto v = variant_distribution(dataset, pair);
        variants.push_back({{"pair_id", v.pair_id},
                            {"n", v.n},
                            {"share_a", v.share_a},
                            {"share_b", v.share_b},
                            {"share_both", v.share_both}});
      }
    }
    rounds_json.push_back(std::move(rj));
  }
  // Stability between consecutive rounds, in round-id order.
  auto& stab = j["stability"] = nlohmann::ordered_json::array();
  for (auto it = rounds.begin(); it != rounds.end(); ++it) {
    auto next = std::next(it);
    if (next == rounds.end()) break;
    if (it->second.ratings.empty() || next->second.ratings.empty()) continue;
    try {
      stab.push_back({{"from", it->first},
                      {"to", next->first},
                      {"unchanged_share", stability(it->second, next->second)}});
    } catch (const DataError&) {
      // Rounds without shared cells simply have no stability entry.
    }
  }
  return j;
}

}  // namespace prefkit
