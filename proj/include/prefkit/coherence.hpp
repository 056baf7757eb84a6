#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefkit/aggregation.hpp"
#include "prefkit/utility_model.hpp"

namespace prefkit {

// Preference coherence diagnostics: cycle rate over option triplets, model
// accuracy against the empirical majority, and how sharp (non-indifferent /
// decisive) the empirical preferences are. All preference relations are
// evaluated on integer counts, never on float thresholds.

enum class TransitivityMode { Sampled, Exhaustive };
enum class TiePolicy { CountIfPredNear, AlwaysWrong, Exclude };

const char* to_string(TransitivityMode m);
const char* to_string(TiePolicy p);
std::optional<TransitivityMode> transitivity_mode_from_string(
    const std::string& s);
std::optional<TiePolicy> tie_policy_from_string(const std::string& s);

struct TransitivityResult {
  double rate = 0.0;  // 1 - cycles/sampled
  long long cycles = 0;
  long long sampled = 0;  // triplets actually evaluated (tie-free, complete)
  TransitivityMode mode = TransitivityMode::Sampled;
};

// Counts directed 3-cycles (a beats b, b beats c, c beats a, in either
// orientation) among strict majority preferences. Triplets touching a tie or
// a missing pair are skipped and replaced by further draws (Sampled) or left
// out of the denominator (Exhaustive). Sampled draws are uniform without
// replacement, seeded; the count of requested triplets is capped by the
// number of usable ones.
//
// The plain entry point parallelizes the cycle scan when built with OpenMP;
// the _serial variant is the single-threaded reference. Both count with
// integer sums, so results are identical for any thread count.
TransitivityResult transitivity(const PreferenceMatrix& matrix,
                                long long n_triplets, std::uint64_t seed,
                                TransitivityMode mode);
TransitivityResult transitivity_serial(const PreferenceMatrix& matrix,
                                       long long n_triplets,
                                       std::uint64_t seed,
                                       TransitivityMode mode);

struct AccuracyResult {
  double accuracy = 0.0;
  long long correct = 0;
  long long total = 0;  // valid pairs minus any excluded by the tie policy
  long long tie_pairs = 0;  // empirical ties seen (before policy)
  TiePolicy policy = TiePolicy::CountIfPredNear;
};

// A pair is predicted correctly when the model's probability falls on the
// same side of 0.5 as the empirical majority. Empirically tied pairs are
// governed by the tie policy: CountIfPredNear accepts predictions within
// 0.05 of 0.5, AlwaysWrong keeps them in the denominator as misses, Exclude
// drops them.
AccuracyResult model_accuracy(const UtilityModel& model,
                              const PreferenceMatrix& matrix,
                              TiePolicy policy = TiePolicy::CountIfPredNear);

// One empirical probability value (reduced fraction wins/trials) and how
// many canonical pairs sit exactly on it.
struct HistogramBin {
  int wins = 0;       // reduced numerator
  int trials = 1;     // reduced denominator
  double p = 0.0;
  long long count = 0;
};

struct SharpnessResult {
  double share_nonindifferent = 0.0;  // P != 0.5 exactly
  double share_decisive = 0.0;        // P >= 0.8 or P <= 0.2
  long long valid_pairs = 0;
  std::vector<HistogramBin> histogram;  // ascending in p; counts sum to valid
};

// Shares are over canonical pairs with data; each pair contributes one P
// value in canonical orientation, which is what the histogram bins.
SharpnessResult sharpness(const PreferenceMatrix& matrix);

std::string histogram_csv(const SharpnessResult& result);

struct CoherenceConfig {
  long long n_triplets = 10000;
  std::uint64_t seed = 0;
  TransitivityMode mode = TransitivityMode::Sampled;
  TiePolicy tie_policy = TiePolicy::CountIfPredNear;
};

struct CoherenceReport {
  TransitivityResult transitivity;
  AccuracyResult accuracy;                    // under config.tie_policy
  std::vector<AccuracyResult> accuracy_audit;  // one entry per policy
  SharpnessResult sharpness;
  CoherenceConfig config;

  nlohmann::ordered_json to_json() const;
};

CoherenceReport coherence_report(const PreferenceMatrix& matrix,
                                 const UtilityModel& model,
                                 const CoherenceConfig& config);

}  // namespace prefkit
