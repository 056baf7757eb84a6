#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prefkit/corpus.hpp"
#include "prefkit/rng.hpp"
#include "prefkit/utility_model.hpp"

namespace prefkit {

// One scheduled comparison. The pair is stored in canonical orientation
// (first member earlier in corpus order); `order` controls which member is
// shown as Option A.
struct TrialSpec {
  std::string trial_id;
  std::pair<std::string, std::string> pair;
  Order order = Order::AB;
  int repetition_index = 0;
};

// Full schedule: N(N-1)/2 pairs, K repetitions each, ceil(K/2) AB and
// floor(K/2) BA per pair, globally shuffled by seed.
std::vector<TrialSpec> build_schedule(const ScenarioSet& set, int repetitions,
                                      std::uint64_t seed);

enum class SlotChoice { A, B, Invalid };

// Normalizes a raw response: trims whitespace, strips trailing punctuation
// from the leading token, matches "A"/"B" (also "Option A"/"Option B")
// case-insensitively. Anything else is Invalid.
SlotChoice parse_choice(const std::string& raw);

enum class ParsedChoice { ChoseX, ChoseY, Invalid };

const char* to_string(ParsedChoice p);
std::optional<ParsedChoice> parsed_choice_from_string(const std::string& s);

// Maps a slot letter back to the underlying pair member: "A" under order BA
// means the pair's second member (ChoseY) was chosen.
ParsedChoice decode_slot_choice(SlotChoice slot, Order order);

struct ComparisonRecord {
  std::string trial_id;
  std::pair<std::string, std::string> pair;
  Order order = Order::AB;
  std::string raw_response;
  ParsedChoice parsed = ParsedChoice::Invalid;
  int attempt_count = 0;
  std::int64_t timestamp = 0;  // epoch milliseconds
  std::string backend_tag;
  std::string transport_error;  // last transport failure, empty if none

  nlohmann::ordered_json to_json() const;
  static ComparisonRecord from_json(const nlohmann::json& j);
};

// JSON-Lines trial log.
void append_record(std::ostream& out, const ComparisonRecord& record);
// Reads a log; an unterminated final line (interrupted run) is ignored.
std::vector<ComparisonRecord> read_trial_log(std::istream& in);
std::vector<ComparisonRecord> read_trial_log_file(const std::string& path);

// What a backend sees for one attempt. HTTP/mock backends read only the
// prompt; the synthetic respondent consults the pair and order, and draws
// from the trial's deterministic stream.
struct TrialContext {
  const TrialSpec& spec;
  const std::string& prompt;
  Xoshiro256& rng;
};

// Stateless respondent contract: a prompt in, a raw response text out.
// Transport problems are reported by throwing BackendError; the runner
// retries with backoff.
class RespondentBackend {
 public:
  virtual ~RespondentBackend() = default;
  virtual std::string respond(const TrialContext& ctx) = 0;
  virtual std::string tag() const = 0;
};

// Fixed-response respondent for smoke tests and dry wiring.
class MockBackend : public RespondentBackend {
 public:
  explicit MockBackend(std::string response = "A")
      : response_(std::move(response)) {}
  std::string respond(const TrialContext&) override { return response_; }
  std::string tag() const override { return "mock"; }

 private:
  std::string response_;
};

// Draws "A"/"B" from ground-truth utilities: slot A wins with probability
// Phi((mu_a - mu_b) / sqrt(sigma_a^2 + sigma_b^2)).
std::string synthetic_sample(const UtilityModel& truth,
                             const std::pair<std::string, std::string>& pair,
                             Order order, Xoshiro256& rng);

class SyntheticBackend : public RespondentBackend {
 public:
  explicit SyntheticBackend(UtilityModel truth) : truth_(std::move(truth)) {}
  std::string respond(const TrialContext& ctx) override {
    return synthetic_sample(truth_, ctx.spec.pair, ctx.spec.order, ctx.rng);
  }
  std::string tag() const override { return "synthetic"; }
  const UtilityModel& truth() const { return truth_; }

 private:
  UtilityModel truth_;
};

// Chat-completions style HTTP respondent. The API key is read from the
// PREFKIT_API_KEY environment variable and never logged.
struct HttpBackendConfig {
  std::string base_url;  // e.g. https://api.openai.com
  std::string path = "/v1/chat/completions";
  std::string model;
  double temperature = 1.0;
  std::string system_message;  // optional; omitted when empty
  std::string api_key_env = "PREFKIT_API_KEY";
  int timeout_s = 120;
};

class HttpBackend : public RespondentBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string respond(const TrialContext& ctx) override;
  std::string tag() const override;

  // Request body for one prompt; exposed so the wire format is testable.
  nlohmann::ordered_json request_body(const std::string& prompt) const;

 private:
  HttpBackendConfig config_;
  std::string api_key_;
};

struct ElicitOptions {
  int parallelism = 1;
  int retry_limit = 3;
  std::uint64_t seed = 0;
  double backoff_base_s = 1.0;  // exponential backoff between attempts
  double backoff_factor = 2.0;
  std::string prompt_template = kDefaultPromptTemplate;
  std::string log_path;  // durable JSONL log; empty disables logging
  bool resume = false;   // skip trial_ids already present in log_path
  std::function<void(std::size_t done, std::size_t total)> progress;
};

// Drives the backend over the schedule with bounded concurrency. Returns one
// record per trial in schedule order regardless of completion order. Invalid
// parses and transport errors are retried up to retry_limit attempts; a trial
// that never parses is recorded Invalid with attempt_count == retry_limit.
std::vector<ComparisonRecord> run_elicitation(
    const ScenarioSet& set, const std::vector<TrialSpec>& schedule,
    RespondentBackend& backend, const ElicitOptions& options);

}  // namespace prefkit
