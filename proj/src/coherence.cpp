#include "prefkit/coherence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "prefkit/common.hpp"
#include "prefkit/rng.hpp"

namespace prefkit {

const char* to_string(TransitivityMode m) {
  return m == TransitivityMode::Sampled ? "Sampled" : "Exhaustive";
}

const char* to_string(TiePolicy p) {
  switch (p) {
    case TiePolicy::CountIfPredNear: return "CountIfPredNear";
    case TiePolicy::AlwaysWrong: return "AlwaysWrong";
    case TiePolicy::Exclude: return "Exclude";
  }
  return "?";
}

std::optional<TransitivityMode> transitivity_mode_from_string(
    const std::string& s) {
  if (s == "Sampled") return TransitivityMode::Sampled;
  if (s == "Exhaustive") return TransitivityMode::Exhaustive;
  return std::nullopt;
}

std::optional<TiePolicy> tie_policy_from_string(const std::string& s) {
  if (s == "CountIfPredNear") return TiePolicy::CountIfPredNear;
  if (s == "AlwaysWrong") return TiePolicy::AlwaysWrong;
  if (s == "Exclude") return TiePolicy::Exclude;
  return std::nullopt;
}

namespace {

// Strict-majority relation flattened for the triplet scan: beats[x*n+y] is 1
// iff 2*wins(x,y) > trials(x,y) with data present. A triplet is usable when
// every one of its three pairs is strict one way or the other (which also
// rules out missing pairs).
struct StrictRelation {
  std::size_t n = 0;
  std::vector<unsigned char> beats;

  explicit StrictRelation(const PreferenceMatrix& m)
      : n(m.size()), beats(m.size() * m.size(), 0) {
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        if (x != y && m.strictly_prefers(x, y)) beats[x * n + y] = 1;
  }

  bool strict(std::size_t x, std::size_t y) const {
    return beats[x * n + y] || beats[y * n + x];
  }
  bool usable(std::size_t a, std::size_t b, std::size_t c) const {
    return strict(a, b) && strict(b, c) && strict(a, c);
  }
  bool cyclic(std::size_t a, std::size_t b, std::size_t c) const {
    return (beats[a * n + b] && beats[b * n + c] && beats[c * n + a]) ||
           (beats[b * n + a] && beats[c * n + b] && beats[a * n + c]);
  }
};

unsigned long long triplet_count(std::size_t n) {
  return static_cast<unsigned long long>(n) * (n - 1) * (n - 2) / 6;
}

// Above this pool size, drawing triplets beats materializing them all.
constexpr unsigned long long kMaterializeCap = 4'000'000ULL;

using Triplet = std::array<std::uint32_t, 3>;

// Uniform sample without replacement of usable triplets, deterministic in
// the seed. Selection is inherently serial; the (cheap) usability test rides
// along with it, and only the cycle scan downstream is parallel.
std::vector<Triplet> sample_usable_triplets(const StrictRelation& rel,
                                            long long n_triplets,
                                            std::uint64_t seed) {
  const std::size_t n = rel.n;
  const unsigned long long total = triplet_count(n);
  std::vector<Triplet> chosen;
  chosen.reserve(static_cast<std::size_t>(
      std::min<long long>(n_triplets, static_cast<long long>(
                                          std::min(total, kMaterializeCap)))));
  Xoshiro256 rng(seed);

  if (total <= kMaterializeCap) {
    std::vector<Triplet> all;
    all.reserve(static_cast<std::size_t>(total));
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j)
        for (std::uint32_t k = j + 1; k < n; ++k)
          all.push_back({i, j, k});
    deterministic_shuffle(all, rng);
    for (const auto& t : all) {
      if (static_cast<long long>(chosen.size()) >= n_triplets) break;
      if (rel.usable(t[0], t[1], t[2])) chosen.push_back(t);
    }
    return chosen;
  }

  // Huge pools: rejection-sample distinct indices and dedup drawn triplets.
  std::unordered_set<std::uint64_t> seen;
  const long long attempt_cap = n_triplets * 64 + 1024;
  for (long long attempts = 0;
       attempts < attempt_cap &&
       static_cast<long long>(chosen.size()) < n_triplets;
       ++attempts) {
    std::uint32_t a = static_cast<std::uint32_t>(rng.below(n));
    std::uint32_t b = static_cast<std::uint32_t>(rng.below(n));
    std::uint32_t c = static_cast<std::uint32_t>(rng.below(n));
    if (a == b || a == c || b == c) continue;
    Triplet t{a, b, c};
    std::sort(t.begin(), t.end());
    const std::uint64_t key =
        (static_cast<std::uint64_t>(t[0]) << 42) |
        (static_cast<std::uint64_t>(t[1]) << 21) | t[2];
    if (!seen.insert(key).second) continue;
    if (rel.usable(t[0], t[1], t[2])) chosen.push_back(t);
  }
  return chosen;
}

TransitivityResult transitivity_impl(const PreferenceMatrix& matrix,
                                     long long n_triplets, std::uint64_t seed,
                                     TransitivityMode mode, bool parallel) {
  if (matrix.size() < 3)
    throw DataError("transitivity: need at least 3 options");
  const StrictRelation rel(matrix);

  TransitivityResult result;
  result.mode = mode;
  long long cycles = 0;
  long long valid = 0;

  if (mode == TransitivityMode::Exhaustive) {
    const auto n = static_cast<std::int64_t>(matrix.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : cycles, valid) \
    if (parallel)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = i + 1; j < n; ++j) {
        for (std::int64_t k = j + 1; k < n; ++k) {
          const auto a = static_cast<std::size_t>(i);
          const auto b = static_cast<std::size_t>(j);
          const auto c = static_cast<std::size_t>(k);
          if (!rel.usable(a, b, c)) continue;
          ++valid;
          cycles += rel.cyclic(a, b, c) ? 1 : 0;
        }
      }
    }
  } else {
    if (n_triplets < 1)
      throw DataError("transitivity: triplet sample size must be >= 1");
    const auto chosen = sample_usable_triplets(rel, n_triplets, seed);
    valid = static_cast<long long>(chosen.size());
    const auto count = static_cast<std::int64_t>(chosen.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : cycles) if (parallel)
#endif
    for (std::int64_t i = 0; i < count; ++i) {
      const auto& t = chosen[static_cast<std::size_t>(i)];
      cycles += rel.cyclic(t[0], t[1], t[2]) ? 1 : 0;
    }
  }
  (void)parallel;

  if (valid == 0)
    throw DataError("transitivity: no tie-free complete triplets available");
  result.cycles = cycles;
  result.sampled = valid;
  result.rate = 1.0 - static_cast<double>(cycles) / static_cast<double>(valid);
  return result;
}

}  // namespace

TransitivityResult transitivity(const PreferenceMatrix& matrix,
                                long long n_triplets, std::uint64_t seed,
                                TransitivityMode mode) {
  return transitivity_impl(matrix, n_triplets, seed, mode, true);
}

TransitivityResult transitivity_serial(const PreferenceMatrix& matrix,
                                       long long n_triplets,
                                       std::uint64_t seed,
                                       TransitivityMode mode) {
  return transitivity_impl(matrix, n_triplets, seed, mode, false);
}

AccuracyResult model_accuracy(const UtilityModel& model,
                              const PreferenceMatrix& matrix,
                              TiePolicy policy) {
  std::vector<std::size_t> model_index(matrix.size());
  for (std::size_t i = 0; i < matrix.size(); ++i)
    model_index[i] = model.index_of(matrix.options()[i]);

  AccuracyResult result;
  result.policy = policy;
  for (std::size_t x = 0; x < matrix.size(); ++x) {
    for (std::size_t y = x + 1; y < matrix.size(); ++y) {
      if (!matrix.has_data(x, y)) continue;
      const int emp_sign = matrix.strictly_prefers(x, y)   ? 1
                           : matrix.strictly_prefers(y, x) ? -1
                                                           : 0;
      const double pred =
          predict_prob_by_index(model, model_index[x], model_index[y]);
      if (emp_sign == 0) {
        ++result.tie_pairs;
        switch (policy) {
          case TiePolicy::Exclude:
            continue;
          case TiePolicy::AlwaysWrong:
            ++result.total;
            continue;
          case TiePolicy::CountIfPredNear:
            ++result.total;
            result.correct += std::abs(pred - 0.5) <= 0.05 ? 1 : 0;
            continue;
        }
      }
      ++result.total;
      const int pred_sign = pred > 0.5 ? 1 : pred < 0.5 ? -1 : 0;
      result.correct += pred_sign == emp_sign ? 1 : 0;
    }
  }
  if (result.total > 0)
    result.accuracy =
        static_cast<double>(result.correct) / static_cast<double>(result.total);
  return result;
}

SharpnessResult sharpness(const PreferenceMatrix& matrix) {
  SharpnessResult result;
  long long nonindifferent = 0;
  long long decisive = 0;
  // Bin key is the reduced fraction, so 7/10 and 14/20 share a bin.
  std::map<std::pair<int, int>, long long> bins;
  for (std::size_t x = 0; x < matrix.size(); ++x) {
    for (std::size_t y = x + 1; y < matrix.size(); ++y) {
      if (!matrix.has_data(x, y)) continue;
      const int w = matrix.wins(x, y);
      const int n = matrix.trials(x, y);
      ++result.valid_pairs;
      nonindifferent += 2 * w != n ? 1 : 0;
      decisive += (5 * w >= 4 * n || 5 * w <= n) ? 1 : 0;
      const int g = std::gcd(w, n);
      ++bins[{g ? w / g : 0, g ? n / g : 1}];
    }
  }
  if (result.valid_pairs > 0) {
    result.share_nonindifferent =
        static_cast<double>(nonindifferent) / result.valid_pairs;
    result.share_decisive = static_cast<double>(decisive) / result.valid_pairs;
  }
  std::vector<HistogramBin> hist;
  hist.reserve(bins.size());
  for (const auto& [key, count] : bins) {
    HistogramBin b;
    b.wins = key.first;
    b.trials = key.second;
    b.p = static_cast<double>(key.first) / key.second;
    b.count = count;
    hist.push_back(b);
  }
  std::sort(hist.begin(), hist.end(),
            [](const HistogramBin& a, const HistogramBin& b) {
              // a.wins/a.trials < b.wins/b.trials on integers
              return static_cast<long long>(a.wins) * b.trials <
                     static_cast<long long>(b.wins) * a.trials;
            });
  result.histogram = std::move(hist);
  return result;
}

std::string histogram_csv(const SharpnessResult& result) {
  std::ostringstream out;
  out << "p,count\n";
  for (const auto& b : result.histogram)
    out << nlohmann::json(b.p).dump() << ',' << b.count << '\n';
  return out.str();
}

nlohmann::ordered_json CoherenceReport::to_json() const {
  nlohmann::ordered_json j;
  j["transitivity"] = {{"mode", to_string(transitivity.mode)},
                       {"rate", transitivity.rate},
                       {"cycles", transitivity.cycles},
                       {"sampled", transitivity.sampled},
                       {"requested", config.n_triplets},
                       {"seed", config.seed}};
  auto acc_json = [](const AccuracyResult& a) {
    return nlohmann::ordered_json{{"tie_policy", to_string(a.policy)},
                                  {"accuracy", a.accuracy},
                                  {"correct", a.correct},
                                  {"total", a.total},
                                  {"tie_pairs", a.tie_pairs}};
  };
  j["model_accuracy"] = acc_json(accuracy);
  auto& audit = j["model_accuracy"]["audit"] = nlohmann::ordered_json::array();
  for (const auto& a : accuracy_audit) audit.push_back(acc_json(a));
  nlohmann::ordered_json sj;
  sj["share_nonindifferent"] = sharpness.share_nonindifferent;
  sj["share_decisive"] = sharpness.share_decisive;
  sj["valid_pairs"] = sharpness.valid_pairs;
  auto& hist = sj["histogram"] = nlohmann::ordered_json::array();
  for (const auto& b : sharpness.histogram)
    hist.push_back({{"p", b.p},
                    {"wins", b.wins},
                    {"trials", b.trials},
                    {"count", b.count}});
  j["sharpness"] = std::move(sj);
  return j;
}

CoherenceReport coherence_report(const PreferenceMatrix& matrix,
                                 const UtilityModel& model,
                                 const CoherenceConfig& config) {
  CoherenceReport report;
  report.config = config;
  report.transitivity =
      transitivity(matrix, config.n_triplets, config.seed, config.mode);
  report.accuracy = model_accuracy(model, matrix, config.tie_policy);
  for (TiePolicy p : {TiePolicy::CountIfPredNear, TiePolicy::AlwaysWrong,
                      TiePolicy::Exclude})
    report.accuracy_audit.push_back(model_accuracy(model, matrix, p));
  report.sharpness = prefkit::sharpness(matrix);
  return report;
}

}  // namespace prefkit
