#include "prefkit/elicitation.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "prefkit/common.hpp"
#include "prefkit/normal.hpp"

namespace prefkit {

std::vector<TrialSpec> build_schedule(const ScenarioSet& set, int repetitions,
                                      std::uint64_t seed) {
  if (repetitions < 1)
    throw DataError("build_schedule: repetition count must be >= 1");
  const auto& scenarios = set.scenarios();
  const std::size_t n = scenarios.size();
  if (n < 2) throw DataError("build_schedule: need at least 2 scenarios");

  const int ab_count = (repetitions + 1) / 2;  // ceil(K/2) AB, rest BA
  std::vector<TrialSpec> schedule;
  schedule.reserve(n * (n - 1) / 2 * static_cast<std::size_t>(repetitions));
  std::size_t pair_index = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (int rep = 0; rep < repetitions; ++rep) {
        TrialSpec t;
        t.trial_id =
            "p" + std::to_string(pair_index) + "r" + std::to_string(rep);
        t.pair = {scenarios[i].scenario_id, scenarios[j].scenario_id};
        t.order = rep < ab_count ? Order::AB : Order::BA;
        t.repetition_index = rep;
        schedule.push_back(std::move(t));
      }
      ++pair_index;
    }
  }
  Xoshiro256 rng(seed);
  deterministic_shuffle(schedule, rng);
  return schedule;
}

SlotChoice parse_choice(const std::string& raw) {
  std::string_view s = trim(raw);
  auto next_token = [&s]() -> std::string {
    auto end = s.find_first_of(" \t\r\n\f\v");
    std::string tok(s.substr(0, end));
    s = end == std::string_view::npos ? std::string_view{}
                                      : trim(s.substr(end));
    return tok;
  };
  auto strip_trailing_punct = [](std::string tok) {
    while (!tok.empty() &&
           std::ispunct(static_cast<unsigned char>(tok.back())))
      tok.pop_back();
    return tok;
  };

  std::string tok = strip_trailing_punct(next_token());
  std::string low = to_lower(tok);
  if (low == "option") {
    tok = strip_trailing_punct(next_token());
    low = to_lower(tok);
  }
  if (low == "a") return SlotChoice::A;
  if (low == "b") return SlotChoice::B;
  return SlotChoice::Invalid;
}

const char* to_string(ParsedChoice p) {
  switch (p) {
    case ParsedChoice::ChoseX: return "ChoseX";
    case ParsedChoice::ChoseY: return "ChoseY";
    case ParsedChoice::Invalid: return "Invalid";
  }
  return "?";
}

std::optional<ParsedChoice> parsed_choice_from_string(const std::string& s) {
  if (s == "ChoseX") return ParsedChoice::ChoseX;
  if (s == "ChoseY") return ParsedChoice::ChoseY;
  if (s == "Invalid") return ParsedChoice::Invalid;
  return std::nullopt;
}

ParsedChoice decode_slot_choice(SlotChoice slot, Order order) {
  if (slot == SlotChoice::Invalid) return ParsedChoice::Invalid;
  const bool chose_a = slot == SlotChoice::A;
  const bool chose_first = order == Order::AB ? chose_a : !chose_a;
  return chose_first ? ParsedChoice::ChoseX : ParsedChoice::ChoseY;
}

nlohmann::ordered_json ComparisonRecord::to_json() const {
  nlohmann::ordered_json j;
  j["trial_id"] = trial_id;
  j["pair"] = {pair.first, pair.second};
  j["order"] = to_string(order);
  j["raw_response"] = raw_response;
  j["parsed"] = to_string(parsed);
  j["attempt_count"] = attempt_count;
  j["timestamp"] = timestamp;
  j["backend_tag"] = backend_tag;
  if (!transport_error.empty()) j["transport_error"] = transport_error;
  return j;
}

ComparisonRecord ComparisonRecord::from_json(const nlohmann::json& j) {
  ComparisonRecord r;
  r.trial_id = j.at("trial_id").get<std::string>();
  const auto& p = j.at("pair");
  if (!p.is_array() || p.size() != 2)
    throw DataError("trial log: 'pair' must be a two-element array");
  r.pair = {p[0].get<std::string>(), p[1].get<std::string>()};
  auto order = order_from_string(j.at("order").get<std::string>());
  if (!order) throw DataError("trial log: bad order value");
  r.order = *order;
  r.raw_response = j.at("raw_response").get<std::string>();
  auto parsed = parsed_choice_from_string(j.at("parsed").get<std::string>());
  if (!parsed) throw DataError("trial log: bad parsed value");
  r.parsed = *parsed;
  r.attempt_count = j.at("attempt_count").get<int>();
  r.timestamp = j.value("timestamp", std::int64_t{0});
  r.backend_tag = j.value("backend_tag", std::string{});
  r.transport_error = j.value("transport_error", std::string{});
  return r;
}

void append_record(std::ostream& out, const ComparisonRecord& record) {
  out << record.to_json().dump() << '\n';
}

std::vector<ComparisonRecord> read_trial_log(std::istream& in) {
  std::vector<ComparisonRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (in.eof() && !line.empty() && line.back() != '}') break;  // torn tail
    if (trim(line).empty()) continue;
    try {
      records.push_back(
          ComparisonRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error&) {
      if (in.peek() == std::char_traits<char>::eof()) break;  // torn tail
      throw DataError("trial log line " + std::to_string(lineno) +
                      ": invalid JSON");
    }
  }
  return records;
}

std::vector<ComparisonRecord> read_trial_log_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open trial log: " + path);
  return read_trial_log(in);
}

std::string synthetic_sample(const UtilityModel& truth,
                             const std::pair<std::string, std::string>& pair,
                             Order order, Xoshiro256& rng) {
  const std::string& slot_a = order == Order::AB ? pair.first : pair.second;
  const std::string& slot_b = order == Order::AB ? pair.second : pair.first;
  const double p_a = predict_prob(truth, slot_a, slot_b);
  return rng.uniform() < p_a ? "A" : "B";
}

namespace {

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::vector<ComparisonRecord> run_elicitation(
    const ScenarioSet& set, const std::vector<TrialSpec>& schedule,
    RespondentBackend& backend, const ElicitOptions& options) {
  if (schedule.empty()) throw DataError("run_elicitation: empty schedule");
  if (options.parallelism < 1)
    throw DataError("run_elicitation: parallelism must be >= 1");
  if (options.retry_limit < 1)
    throw DataError("run_elicitation: retry_limit must be >= 1");

  std::vector<ComparisonRecord> results(schedule.size());
  std::vector<char> done(schedule.size(), 0);

  // Resume: trials already in the log keep their recorded outcome.
  std::unordered_map<std::string, ComparisonRecord> existing;
  if (options.resume && !options.log_path.empty()) {
    std::ifstream in(options.log_path, std::ios::binary);
    if (in) {
      for (auto& r : read_trial_log(in)) existing.emplace(r.trial_id, r);
    }
  }
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    auto it = existing.find(schedule[i].trial_id);
    if (it != existing.end()) {
      results[i] = it->second;
      done[i] = 1;
    }
  }

  std::ofstream log;
  std::mutex log_mutex;
  if (!options.log_path.empty()) {
    log.open(options.log_path, std::ios::binary | std::ios::app);
    if (!log)
      throw Error("run_elicitation: cannot open trial log for append: " +
                  options.log_path);
  }

  std::atomic<std::size_t> cursor{0};
  std::atomic<std::size_t> completed{0};
  std::atomic<bool> abort{false};
  std::mutex failure_mutex;
  std::string failure;

  const std::string tag = backend.tag();
  auto worker = [&]() {
    for (;;) {
      if (abort.load(std::memory_order_relaxed)) return;
      const std::size_t i = cursor.fetch_add(1);
      if (i >= schedule.size()) return;
      if (done[i]) {
        completed.fetch_add(1);
        continue;
      }
      const TrialSpec& spec = schedule[i];
      Xoshiro256 rng = stream_rng(options.seed, i);
      RenderedPrompt prompt;
      try {
        prompt = render_prompt(set.by_id(spec.pair.first),
                               set.by_id(spec.pair.second), spec.order,
                               options.prompt_template);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure.empty()) failure = e.what();
        abort.store(true);
        return;
      }

      ComparisonRecord rec;
      rec.trial_id = spec.trial_id;
      rec.pair = spec.pair;
      rec.order = spec.order;
      rec.backend_tag = tag;
      rec.parsed = ParsedChoice::Invalid;

      for (int attempt = 1; attempt <= options.retry_limit; ++attempt) {
        rec.attempt_count = attempt;
        try {
          TrialContext ctx{spec, prompt.text, rng};
          rec.raw_response = backend.respond(ctx);
          rec.transport_error.clear();
          SlotChoice slot = parse_choice(rec.raw_response);
          rec.parsed = decode_slot_choice(slot, spec.order);
          if (rec.parsed != ParsedChoice::Invalid) break;
        } catch (const BackendError& e) {
          rec.raw_response.clear();
          rec.transport_error = e.what();
          rec.parsed = ParsedChoice::Invalid;
        }
        if (attempt < options.retry_limit && options.backoff_base_s > 0) {
          const double scale = 0.5 + rng.uniform();  // jitter in [0.5, 1.5)
          const double delay = options.backoff_base_s *
                               std::pow(options.backoff_factor, attempt - 1) *
                               scale;
          std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
      }
      rec.timestamp = now_ms();

      if (log.is_open()) {
        std::lock_guard<std::mutex> lock(log_mutex);
        append_record(log, rec);
        log.flush();
        if (!log) {
          std::lock_guard<std::mutex> flock(failure_mutex);
          if (failure.empty())
            failure = "trial log write failed: " + options.log_path;
          abort.store(true);
          return;
        }
      }
      results[i] = std::move(rec);
      const std::size_t n_done = completed.fetch_add(1) + 1;
      if (options.progress) options.progress(n_done, schedule.size());
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(options.parallelism, schedule.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (!failure.empty()) throw Error("run_elicitation: " + failure);
  return results;
}

}  // namespace prefkit
