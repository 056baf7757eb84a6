#include <cstdint>
#include <string>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"
#include "prefkit/aggregation.hpp"
#include "prefkit/coherence.hpp"
#include "prefkit/common.hpp"
#include "prefkit/rng.hpp"
#include "prefkit/utility_model.hpp"

using namespace prefkit;

namespace {

std::vector<std::string> names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("o" + std::to_string(i));
  return out;
}

// Every pair decided 2:1 according to a strict total order by index.
PreferenceMatrix total_order_matrix(int n) {
  PreferenceMatrix m(names(n));
  for (std::size_t x = 0; x < static_cast<std::size_t>(n); ++x)
    for (std::size_t y = x + 1; y < static_cast<std::size_t>(n); ++y)
      m.set_pair(x, y, 2, 3);
  return m;
}

// Random complete matrix; some pairs tied when allow_ties.
PreferenceMatrix random_matrix(int n, std::uint64_t seed, bool allow_ties) {
  PreferenceMatrix m(names(n));
  Xoshiro256 rng(seed);
  for (std::size_t x = 0; x < static_cast<std::size_t>(n); ++x)
    for (std::size_t y = x + 1; y < static_cast<std::size_t>(n); ++y) {
      const int trials = 10;
      int wins = static_cast<int>(rng.below(trials + 1));
      if (!allow_ties && 2 * wins == trials) wins += 1;
      m.set_pair(x, y, wins, trials);
    }
  return m;
}

// Independent cycle recount: walks every index triple and checks the three
// strict relations explicitly in both rotational directions.
std::pair<long long, long long> brute_force_cycles(const PreferenceMatrix& m) {
  long long cycles = 0, valid = 0;
  const std::size_t n = m.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c) {
        if (m.missing(a, b) || m.missing(a, c) || m.missing(b, c)) continue;
        if (m.tie(a, b) || m.tie(a, c) || m.tie(b, c)) continue;
        ++valid;
        const bool forward = m.strictly_prefers(a, b) &&
                             m.strictly_prefers(b, c) &&
                             m.strictly_prefers(c, a);
        const bool backward = m.strictly_prefers(b, a) &&
                              m.strictly_prefers(c, b) &&
                              m.strictly_prefers(a, c);
        if (forward || backward) ++cycles;
      }
  return {cycles, valid};
}

}  // namespace

TEST_SUITE("coherence") {

TEST_CASE("the rock-paper-scissors triangle is one cycle out of one triplet") {
  PreferenceMatrix m(names(3));
  m.set_pair(0, 1, 5, 5);  // o0 beats o1
  m.set_pair(1, 2, 5, 5);  // o1 beats o2
  m.set_pair(0, 2, 0, 5);  // o2 beats o0
  const auto r = transitivity(m, 10, 1, TransitivityMode::Exhaustive);
  CHECK(r.sampled == 1);
  CHECK(r.cycles == 1);
  CHECK(r.rate == 0.0);

  const auto s = transitivity(m, 10, 1, TransitivityMode::Sampled);
  CHECK(s.sampled == 1);
  CHECK(s.cycles == 1);
}

TEST_CASE("a strict total order has transitivity rate 1") {
  const auto m = total_order_matrix(8);
  const auto r = transitivity(m, 1, 0, TransitivityMode::Exhaustive);
  CHECK(r.sampled == 56);  // C(8,3)
  CHECK(r.cycles == 0);
  CHECK(r.rate == 1.0);
}

TEST_CASE("exhaustive scan matches the brute-force recount") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto m = random_matrix(9, seed, true);
    const auto expected = brute_force_cycles(m);
    const auto r = transitivity(m, 1, 0, TransitivityMode::Exhaustive);
    CHECK(r.cycles == expected.first);
    CHECK(r.sampled == expected.second);
  }
}

TEST_CASE("sampling every triplet equals the exhaustive scan") {
  for (int n = 4; n <= 12; n += 2) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto m = random_matrix(n, 100 + seed, true);
      const auto ex = transitivity(m, 1, 0, TransitivityMode::Exhaustive);
      const long long all = static_cast<long long>(n) * (n - 1) * (n - 2) / 6;
      const auto sa = transitivity(m, all, seed, TransitivityMode::Sampled);
      CAPTURE(n);
      CHECK(sa.sampled == ex.sampled);
      CHECK(sa.cycles == ex.cycles);
      CHECK(sa.rate == ex.rate);
    }
  }
}

TEST_CASE("sampled mode is seed-deterministic") {
  const auto m = random_matrix(30, 5, false);
  const auto a = transitivity(m, 500, 11, TransitivityMode::Sampled);
  const auto b = transitivity(m, 500, 11, TransitivityMode::Sampled);
  CHECK(a.cycles == b.cycles);
  CHECK(a.sampled == b.sampled);
  CHECK(a.sampled == 500);
}

TEST_CASE("parallel and serial transitivity agree exactly") {
  const auto m = random_matrix(16, 8, true);
  for (auto mode : {TransitivityMode::Exhaustive, TransitivityMode::Sampled}) {
    const auto a = transitivity(m, 300, 2, mode);
    const auto b = transitivity_serial(m, 300, 2, mode);
    CHECK(a.cycles == b.cycles);
    CHECK(a.sampled == b.sampled);
    CHECK(a.rate == b.rate);
  }
}

TEST_CASE("tied and missing pairs make triplets unusable") {
  PreferenceMatrix m(names(4));
  m.set_pair(0, 1, 5, 10);  // tie: kills triplets {0,1,x}
  m.set_pair(0, 2, 8, 10);
  m.set_pair(0, 3, 8, 10);
  m.set_pair(1, 2, 8, 10);
  m.set_pair(1, 3, 8, 10);
  m.set_pair(2, 3, 8, 10);
  const auto r = transitivity(m, 100, 0, TransitivityMode::Exhaustive);
  CHECK(r.sampled == 2);  // only {0,2,3} and {1,2,3} are tie-free

  PreferenceMatrix all_tied(names(3));
  all_tied.set_pair(0, 1, 5, 10);
  all_tied.set_pair(0, 2, 5, 10);
  all_tied.set_pair(1, 2, 5, 10);
  CHECK_THROWS_AS(transitivity(all_tied, 10, 0, TransitivityMode::Sampled),
                  DataError);
}

TEST_CASE("degenerate transitivity inputs are rejected") {
  CHECK_THROWS_AS(transitivity(random_matrix(2, 0, false), 10, 0,
                               TransitivityMode::Sampled),
                  DataError);
  CHECK_THROWS_AS(transitivity(random_matrix(5, 0, false), 0, 0,
                               TransitivityMode::Sampled),
                  DataError);
}

TEST_CASE("model accuracy under each tie policy") {
  PreferenceMatrix m(names(3));
  m.set_pair(0, 1, 8, 10);  // o0 majority
  m.set_pair(0, 2, 5, 10);  // empirical tie
  m.set_pair(1, 2, 3, 10);  // o2 majority
  // Model: o0 slightly above o1, o2 far below both — so (0,1) is predicted
  // correctly, the (0,2) tie is predicted far from 0.5, and (1,2) is wrong.
  UtilityModel model(names(3), {0.5, 0.45, -0.95},
                     std::vector<double>(3, 0.7071067811865476));

  const auto near = model_accuracy(model, m, TiePolicy::CountIfPredNear);
  CHECK(near.total == 3);
  CHECK(near.correct == 1);
  CHECK(near.tie_pairs == 1);
  CHECK(near.accuracy == doctest::Approx(1.0 / 3));

  const auto wrong = model_accuracy(model, m, TiePolicy::AlwaysWrong);
  CHECK(wrong.total == 3);
  CHECK(wrong.correct == 1);

  const auto excl = model_accuracy(model, m, TiePolicy::Exclude);
  CHECK(excl.total == 2);
  CHECK(excl.correct == 1);
  CHECK(excl.accuracy == 0.5);
}

TEST_CASE("exact-0.5 predictions count only for near-tie forgiveness") {
  PreferenceMatrix m(names(2));
  m.set_pair(0, 1, 8, 10);
  UtilityModel flat(names(2), {0.3, 0.3},
                    std::vector<double>(2, 0.7071067811865476));
  // Prediction exactly 0.5 vs a strict majority: wrong under every policy.
  for (auto policy :
       {TiePolicy::CountIfPredNear, TiePolicy::AlwaysWrong, TiePolicy::Exclude}) {
    const auto r = model_accuracy(flat, m, policy);
    CHECK(r.total == 1);
    CHECK(r.correct == 0);
  }

  PreferenceMatrix tied(names(2));
  tied.set_pair(0, 1, 5, 10);
  const auto r = model_accuracy(flat, tied, TiePolicy::CountIfPredNear);
  CHECK(r.correct == 1);  // exactly-0.5 prediction of an exact tie
}

TEST_CASE("sharpness shares and histogram bins are exact") {
  PreferenceMatrix m(names(4));
  m.set_pair(0, 1, 10, 10);  // 1.0   decisive
  m.set_pair(0, 2, 5, 10);   // 0.5   indifferent
  m.set_pair(0, 3, 8, 10);   // 0.8   decisive
  m.set_pair(1, 2, 2, 10);   // 0.2   decisive
  m.set_pair(1, 3, 6, 10);   // 0.6   neither
  // (2,3) left missing.

  const auto s = sharpness(m);
  CHECK(s.valid_pairs == 5);
  CHECK(s.share_nonindifferent == 0.8);
  CHECK(s.share_decisive == 0.6);

  REQUIRE(s.histogram.size() == 5);
  // Reduced fractions in ascending order.
  CHECK(s.histogram[0].wins == 1);
  CHECK(s.histogram[0].trials == 5);
  CHECK(s.histogram[1].wins == 1);
  CHECK(s.histogram[1].trials == 2);
  CHECK(s.histogram[2].wins == 3);
  CHECK(s.histogram[2].trials == 5);
  CHECK(s.histogram[3].wins == 4);
  CHECK(s.histogram[3].trials == 5);
  CHECK(s.histogram[4].wins == 1);
  CHECK(s.histogram[4].trials == 1);
  long long total = 0;
  for (const auto& b : s.histogram) total += b.count;
  CHECK(total == s.valid_pairs);

  CHECK(histogram_csv(s) == "p,count\n0.2,1\n0.5,1\n0.6,1\n0.8,1\n1.0,1\n");
}

TEST_CASE("decisiveness boundary is integer-exact") {
  PreferenceMatrix m(names(2));
  m.set_pair(0, 1, 4, 5);  // exactly 0.8
  CHECK(sharpness(m).share_decisive == 1.0);
  PreferenceMatrix m2(names(2));
  m2.set_pair(0, 1, 39, 49);  // 0.7959... just below
  CHECK(sharpness(m2).share_decisive == 0.0);
}

TEST_CASE("coherence report bundles all three diagnostics") {
  const auto m = total_order_matrix(6);
  UtilityModel model(names(6), {2.5, 1.5, 0.5, -0.5, -1.5, -2.5},
                     std::vector<double>(6, 0.7071067811865476));
  CoherenceConfig config;
  config.n_triplets = 100;
  config.seed = 3;
  config.mode = TransitivityMode::Exhaustive;
  const auto report = coherence_report(m, model, config);
  CHECK(report.transitivity.rate == 1.0);
  CHECK(report.accuracy.accuracy == 1.0);
  CHECK(report.accuracy_audit.size() == 3);
  CHECK(report.sharpness.valid_pairs == 15);

  const auto j = report.to_json();
  CHECK(j.contains("transitivity"));
  CHECK(j.contains("model_accuracy"));
  CHECK(j.contains("sharpness"));
  CHECK(j["model_accuracy"]["audit"].size() == 3);
}

}  // TEST_SUITE
