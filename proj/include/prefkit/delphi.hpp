#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace prefkit {

// Expert-panel statistics: Likert consensus per item, per-section rollups,
// cross-round stability, profile rankings, and variant-pair choices.

enum class VariantChoice { VariantA, VariantB, Both };
enum class Classification { Consensus, Dissent };

// Interpolated: linear interpolation between order statistics (quantile of
// a sorted sample at h = (n-1)p, fractional h blending neighbours). This is
// the default because integer ratings routinely produce fractional quartiles
// (x.5) under it. NearestOrderStatistic: the no-interpolation rank rule
// (h = ceil(p*n)); kept as a labeled sensitivity switch.
enum class QuartileRule { Interpolated, NearestOrderStatistic };

const char* to_string(VariantChoice c);
const char* to_string(Classification c);
const char* to_string(QuartileRule r);
std::optional<VariantChoice> variant_choice_from_string(const std::string& s);
std::optional<QuartileRule> quartile_rule_from_string(const std::string& s);

// One Delphi round. Maps are keyed by id strings so iteration order (and
// therefore every derived statistic and report) is deterministic.
struct RatingDataset {
  std::string round_id;
  // expert_id -> item_id -> rating in [1,9]
  std::map<std::string, std::map<std::string, int>> ratings;
  // expert_id -> profile_id -> rank in [1..P]; each expert's ranking must be
  // a permutation over the same profile set
  std::map<std::string, std::map<std::string, int>> rankings;
  // expert_id -> pair_id -> choice
  std::map<std::string, std::map<std::string, VariantChoice>> variant_choices;

  std::vector<std::string> item_ids() const;       // sorted, deduplicated
  std::vector<int> ratings_for(const std::string& item_id) const;
};

// CSV loaders. Ratings files may interleave several rounds; one dataset per
// distinct round value is returned, keyed by it. The merge_* loaders attach
// rankings (`round,expert_id,profile_id,rank`) and variant choices
// (`round,expert_id,pair_id,choice`) to already-loaded rounds.
std::map<std::string, RatingDataset> load_ratings_csv(
    const std::string& source);
std::map<std::string, RatingDataset> load_ratings_csv_file(
    const std::string& path);
void merge_rankings_csv(std::map<std::string, RatingDataset>& rounds,
                        const std::string& source);
void merge_rankings_csv_file(std::map<std::string, RatingDataset>& rounds,
                             const std::string& path);
void merge_variants_csv(std::map<std::string, RatingDataset>& rounds,
                        const std::string& source);
void merge_variants_csv_file(std::map<std::string, RatingDataset>& rounds,
                             const std::string& path);

// Quantile of a sample under the chosen rule. The sample is copied and
// sorted internally; p must lie in [0,1].
double quantile(std::vector<double> values, double p, QuartileRule rule);

struct ItemStats {
  std::string item_id;
  int n = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double top_two = 0.0;  // fraction of ratings in {8,9}
  Classification classification = Classification::Dissent;
};

// The consensus rule itself, exposed so the boundary (<=1, >=0.70) is
// directly testable: Consensus iff iqr <= 1 and top_two >= 0.70.
Classification classify(double iqr, double top_two);

ItemStats likert_stats(const RatingDataset& dataset,
                       const std::string& item_id,
                       QuartileRule rule = QuartileRule::Interpolated);
// Stats for every rated item, sorted by item_id.
std::vector<ItemStats> all_item_stats(
    const RatingDataset& dataset, QuartileRule rule = QuartileRule::Interpolated);

struct SectionSummary {
  std::string section;
  int item_count = 0;
  int consensus_count = 0;
  int dissent_count = 0;
  double median_of_medians = 0.0;
  double median_of_iqrs = 0.0;
};

// Rolls item stats up by section; every rated item must be mapped. Sections
// are returned sorted by code.
std::vector<SectionSummary> section_summary(
    const RatingDataset& dataset,
    const std::map<std::string, std::string>& item_sections,
    QuartileRule rule = QuartileRule::Interpolated);

// Fraction of expert x item cells present in both rounds whose rating is
// unchanged. Throws DataError when the rounds share no cells.
double stability(const RatingDataset& round_a, const RatingDataset& round_b);

struct ProfileRankStats {
  std::string profile_id;
  int n = 0;               // experts who submitted rankings
  double rank1_share = 0.0;
  double last_share = 0.0;
  double median_rank = 0.0;
};

// Per-profile placement shares over all submitted rankings, sorted by median
// rank (best first), then rank-1 share, then id.
std::vector<ProfileRankStats> profile_rank_stats(
    const RatingDataset& dataset, QuartileRule rule = QuartileRule::Interpolated);

struct VariantShares {
  std::string pair_id;
  int n = 0;
  double share_a = 0.0;
  double share_b = 0.0;
  double share_both = 0.0;
};

VariantShares variant_distribution(const RatingDataset& dataset,
                                   const std::string& pair_id);

// Full panel report across rounds: per-round item stats (plus section
// rollups when a mapping is supplied), profile and variant distributions
// where present, and stability between consecutive rounds.
nlohmann::ordered_json delphi_report(
    const std::map<std::string, RatingDataset>& rounds,
    const std::map<std::string, std::string>& item_sections = {},
    QuartileRule rule = QuartileRule::Interpolated);

}  // namespace prefkit
