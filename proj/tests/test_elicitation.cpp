#include <atomic>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"
#include "prefkit/common.hpp"
#include "prefkit/elicitation.hpp"
#include "prefkit/rng.hpp"

using namespace prefkit;

namespace {

// N bare scenarios, no polarity-variant structure (the schedule does not
// care about it).
ScenarioSet bare_set(int n) {
  std::vector<Scenario> scenarios;
  for (int i = 0; i < n; ++i) {
    Scenario s;
    s.scenario_id = "s" + std::to_string(i);
    s.item_id = "i" + std::to_string(i);
    s.section = "A";
    s.polarity = Polarity::Neutral;
    s.text = "text " + std::to_string(i);
    scenarios.push_back(std::move(s));
  }
  return ScenarioSet(std::move(scenarios));
}

// Throws on the first attempt of every trial, answers "B" afterwards.
class FlakyBackend : public RespondentBackend {
 public:
  std::string respond(const TrialContext& ctx) override {
    if (seen_.insert(ctx.spec.trial_id).second)
      throw BackendError("synthetic outage");
    return "B";
  }
  std::string tag() const override { return "flaky"; }

 private:
  std::set<std::string> seen_;
};

}  // namespace

TEST_SUITE("elicitation") {

TEST_CASE("schedule has every pair K times with a ceil/floor order split") {
  const auto set = bare_set(10);
  for (int k = 1; k <= 12; ++k) {
    const auto schedule = build_schedule(set, k, 7);
    CHECK(schedule.size() == 45u * k);

    std::map<std::pair<std::string, std::string>, std::pair<int, int>> split;
    std::set<std::string> ids;
    for (const auto& t : schedule) {
      CHECK(set.index_of(t.pair.first) < set.index_of(t.pair.second));
      auto& s = split[t.pair];
      (t.order == Order::AB ? s.first : s.second) += 1;
      ids.insert(t.trial_id);
    }
    CHECK(split.size() == 45);
    CHECK(ids.size() == schedule.size());  // trial ids unique
    for (const auto& [pair, s] : split) {
      CAPTURE(k);
      CHECK(s.first == (k + 1) / 2);
      CHECK(s.second == k / 2);
    }
  }
}

TEST_CASE("schedule shuffle is seeded and global") {
  const auto set = bare_set(6);
  const auto a = build_schedule(set, 4, 11);
  const auto b = build_schedule(set, 4, 11);
  const auto c = build_schedule(set, 4, 12);
  REQUIRE(a.size() == b.size());
  bool same = true, diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a[i].trial_id == b[i].trial_id;
    diff = diff || a[i].trial_id != c[i].trial_id;
  }
  CHECK(same);
  CHECK(diff);
  // Not sorted by pair: some later trial must involve the first pair again.
  std::set<std::string> first_ten;
  for (std::size_t i = 0; i < 10; ++i)
    first_ten.insert(a[i].pair.first + "|" + a[i].pair.second);
  CHECK(first_ten.size() > 1);
}

TEST_CASE("schedule rejects degenerate inputs") {
  CHECK_THROWS_AS(build_schedule(bare_set(1), 4, 0), DataError);
  CHECK_THROWS_AS(build_schedule(bare_set(5), 0, 0), DataError);
}

TEST_CASE("choice parsing accepts slot letters with dressing") {
  CHECK(parse_choice("A") == SlotChoice::A);
  CHECK(parse_choice("b") == SlotChoice::B);
  CHECK(parse_choice("  B.  ") == SlotChoice::B);
  CHECK(parse_choice("a)") == SlotChoice::A);
  CHECK(parse_choice("Option A") == SlotChoice::A);
  CHECK(parse_choice("option b!") == SlotChoice::B);
  CHECK(parse_choice("B, because it is safer") == SlotChoice::B);

  CHECK(parse_choice("") == SlotChoice::Invalid);
  CHECK(parse_choice("AB") == SlotChoice::Invalid);
  CHECK(parse_choice("neither") == SlotChoice::Invalid);
  CHECK(parse_choice("I choose A") == SlotChoice::Invalid);
  CHECK(parse_choice("option") == SlotChoice::Invalid);
}

TEST_CASE("slot decoding respects presentation order") {
  CHECK(decode_slot_choice(SlotChoice::A, Order::AB) == ParsedChoice::ChoseX);
  CHECK(decode_slot_choice(SlotChoice::B, Order::AB) == ParsedChoice::ChoseY);
  CHECK(decode_slot_choice(SlotChoice::A, Order::BA) == ParsedChoice::ChoseY);
  CHECK(decode_slot_choice(SlotChoice::B, Order::BA) == ParsedChoice::ChoseX);
  CHECK(decode_slot_choice(SlotChoice::Invalid, Order::AB) ==
        ParsedChoice::Invalid);
}

TEST_CASE("record json round-trips and omits empty transport errors") {
  ComparisonRecord rec;
  rec.trial_id = "p3r1";
  rec.pair = {"s0", "s4"};
  rec.order = Order::BA;
  rec.raw_response = "Option B";
  rec.parsed = ParsedChoice::ChoseX;
  rec.attempt_count = 2;
  rec.timestamp = 1723700000000;
  const auto j = rec.to_json();
  CHECK(!j.contains("transport_error"));
  const auto back = ComparisonRecord::from_json(j);
  CHECK(back.trial_id == rec.trial_id);
  CHECK(back.pair == rec.pair);
  CHECK(back.order == rec.order);
  CHECK(back.parsed == rec.parsed);
  CHECK(back.attempt_count == rec.attempt_count);

  rec.transport_error = "boom";
  CHECK(ComparisonRecord::from_json(rec.to_json()).transport_error == "boom");
}

TEST_CASE("trial log tolerates a torn final line") {
  ComparisonRecord rec;
  rec.trial_id = "p0r0";
  rec.pair = {"s0", "s1"};
  rec.parsed = ParsedChoice::ChoseX;
  std::ostringstream out;
  append_record(out, rec);
  rec.trial_id = "p0r1";
  append_record(out, rec);

  std::string text = out.str();
  SUBCASE("complete log") {
    std::istringstream in(text);
    CHECK(read_trial_log(in).size() == 2);
  }
  SUBCASE("interrupted mid-write") {
    std::istringstream in(text.substr(0, text.size() - 25));
    const auto records = read_trial_log(in);
    REQUIRE(records.size() == 1);
    CHECK(records[0].trial_id == "p0r0");
  }
  SUBCASE("garbage in the middle still fails") {
    std::istringstream in("{\"broken\n" + text);
    CHECK_THROWS_AS(read_trial_log(in), DataError);
  }
}

TEST_CASE("mock elicitation logs every trial and decodes by order") {
  const auto set = bare_set(4);
  const auto schedule = build_schedule(set, 4, 3);
  MockBackend backend("A");
  testutil::TempDir dir("elicit_mock");

  ElicitOptions options;
  options.seed = 3;
  options.backoff_base_s = 0;
  options.log_path = dir.file("trials.jsonl");
  const auto records = run_elicitation(set, schedule, backend, options);

  REQUIRE(records.size() == schedule.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].trial_id == schedule[i].trial_id);
    CHECK(records[i].attempt_count == 1);
    CHECK(records[i].backend_tag == "mock");
    CHECK(records[i].parsed == (schedule[i].order == Order::AB
                                    ? ParsedChoice::ChoseX
                                    : ParsedChoice::ChoseY));
  }
  CHECK(read_trial_log_file(options.log_path).size() == schedule.size());
}

TEST_CASE("parallel elicitation matches serial run") {
  const auto set = bare_set(5);
  const auto schedule = build_schedule(set, 6, 17);
  UtilityModel truth({"s0", "s1", "s2", "s3", "s4"},
                     {1.0, 0.5, 0.0, -0.5, -1.0},
                     std::vector<double>(5, 0.7071067811865476));

  ElicitOptions options;
  options.seed = 17;
  options.backoff_base_s = 0;

  SyntheticBackend b1(truth), b2(truth);
  const auto serial = run_elicitation(set, schedule, b1, options);
  options.parallelism = 4;
  const auto parallel = run_elicitation(set, schedule, b2, options);

  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].trial_id == parallel[i].trial_id);
    CHECK(serial[i].raw_response == parallel[i].raw_response);
    CHECK(serial[i].parsed == parallel[i].parsed);
  }
}

TEST_CASE("resume keeps completed trials verbatim") {
  const auto set = bare_set(4);
  const auto schedule = build_schedule(set, 3, 5);
  UtilityModel truth({"s0", "s1", "s2", "s3"}, {0.8, 0.2, -0.3, -0.7},
                     std::vector<double>(4, 0.7071067811865476));
  testutil::TempDir dir("elicit_resume");

  ElicitOptions options;
  options.seed = 5;
  options.backoff_base_s = 0;
  options.log_path = dir.file("trials.jsonl");

  SyntheticBackend b1(truth);
  const auto full = run_elicitation(set, schedule, b1, options);

  // Keep only the first 7 log lines, as if the run had been interrupted.
  std::istringstream all(testutil::read_file(options.log_path));
  std::string line, kept;
  for (int i = 0; i < 7 && std::getline(all, line); ++i) kept += line + "\n";
  testutil::write_file(options.log_path, kept);

  options.resume = true;
  SyntheticBackend b2(truth);
  const auto resumed = run_elicitation(set, schedule, b2, options);

  REQUIRE(resumed.size() == full.size());
  std::istringstream kept_in(kept);
  std::map<std::string, std::int64_t> original_stamps;
  for (const auto& r : read_trial_log(kept_in))
    original_stamps[r.trial_id] = r.timestamp;
  for (std::size_t i = 0; i < full.size(); ++i) {
    CHECK(resumed[i].trial_id == full[i].trial_id);
    CHECK(resumed[i].raw_response == full[i].raw_response);
    CHECK(resumed[i].parsed == full[i].parsed);
    auto it = original_stamps.find(resumed[i].trial_id);
    if (it != original_stamps.end())
      CHECK(resumed[i].timestamp == it->second);  // not re-elicited
  }
  // The log holds the kept prefix plus the redone remainder, nothing twice.
  CHECK(read_trial_log_file(options.log_path).size() == schedule.size());
}

TEST_CASE("transport failures are retried with attempts recorded") {
  const auto set = bare_set(3);
  const auto schedule = build_schedule(set, 2, 1);
  FlakyBackend backend;

  ElicitOptions options;
  options.seed = 1;
  options.retry_limit = 3;
  options.backoff_base_s = 0;
  const auto records = run_elicitation(set, schedule, backend, options);
  for (const auto& r : records) {
    CHECK(r.attempt_count == 2);
    CHECK(r.transport_error.empty());  // cleared once an attempt succeeded
    CHECK(r.parsed != ParsedChoice::Invalid);
    CHECK(r.raw_response == "B");
  }
}

TEST_CASE("responses that never parse exhaust the retry budget") {
  const auto set = bare_set(3);
  const auto schedule = build_schedule(set, 1, 2);
  MockBackend backend("cannot decide");

  ElicitOptions options;
  options.seed = 2;
  options.retry_limit = 4;
  options.backoff_base_s = 0;
  const auto records = run_elicitation(set, schedule, backend, options);
  for (const auto& r : records) {
    CHECK(r.parsed == ParsedChoice::Invalid);
    CHECK(r.attempt_count == 4);
    CHECK(r.raw_response == "cannot decide");
  }
}

TEST_CASE("synthetic respondent follows the truth model") {
  UtilityModel truth({"s0", "s1"}, {3.0, -3.0},
                     {0.7071067811865476, 0.7071067811865476});
  // P(s0 beats s1) = Phi(6) — s0 should essentially always win the slot it
  // occupies, under either order.
  Xoshiro256 rng(4);
  int a_under_ab = 0, b_under_ba = 0;
  for (int i = 0; i < 200; ++i) {
    if (synthetic_sample(truth, {"s0", "s1"}, Order::AB, rng) == "A")
      ++a_under_ab;
    if (synthetic_sample(truth, {"s0", "s1"}, Order::BA, rng) == "B")
      ++b_under_ba;
  }
  CHECK(a_under_ab == 200);
  CHECK(b_under_ba == 200);
}

}  // TEST_SUITE
