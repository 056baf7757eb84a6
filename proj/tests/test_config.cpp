#include <algorithm>
#include <string>
#include <vector>

#include <doctest.h>

#include <json.hpp>

#include "helpers.hpp"
#include "prefkit/common.hpp"
#include "prefkit/config.hpp"

using namespace prefkit;

namespace {

bool mentions(const std::vector<std::string>& violations,
              const std::string& needle) {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const std::string& v) {
                       return v.find(needle) != std::string::npos;
                     });
}

// A config whose referenced files actually exist.
struct ConfigFixture {
  testutil::TempDir dir{"config"};
  nlohmann::json base;
  ConfigFixture() {
    testutil::write_file(dir.file("corpus.csv"),
                         "scenario_id,item_id,section,polarity,text\n"
                         "s-pos,i,A,Positive,t\n"
                         "s-neu,i,A,Neutral,t\n"
                         "s-neg,i,A,Negative,t\n");
    testutil::write_file(dir.file("truth.json"),
                         R"({"options":["s-pos","s-neu","s-neg"],
                             "mu":[0.5,0.0,-0.5],
                             "sigma":[0.70710678,0.70710678,0.70710678]})");
    base = {
        {"corpus", dir.file("corpus.csv")},
        {"output_dir", dir.file("out")},
        {"backend", {{"kind", "synthetic"}, {"truth", dir.file("truth.json")}}},
        {"seeds", {{"schedule", 1}, {"fit", 2}, {"coherence", 3}}},
    };
  }
};

}  // namespace

TEST_SUITE("config") {

TEST_CASE("a complete config parses and validates cleanly") {
  ConfigFixture f;
  const auto config = RunConfig::from_json(f.base);
  CHECK(config.backend_kind == BackendKind::Synthetic);
  CHECK(config.schedule_seed == 1);
  CHECK(config.fit_seed == 2);
  CHECK(config.fit.seed == 2);  // forwarded into the fit config
  CHECK(config.coherence_seed == 3);
  CHECK(config.validate().empty());
}

TEST_CASE("every violation is reported at once, not just the first") {
  RunConfig config;  // no corpus, no seeds, synthetic without truth
  config.repetitions = 0;
  config.prompt_template = "no placeholders";
  const auto violations = config.validate();
  CHECK(violations.size() >= 7);
  CHECK(mentions(violations, "corpus path is required"));
  CHECK(mentions(violations, "repetitions"));
  CHECK(mentions(violations, "prompt_template"));
  CHECK(mentions(violations, "seeds.schedule"));
  CHECK(mentions(violations, "seeds.fit"));
  CHECK(mentions(violations, "seeds.coherence"));
  CHECK(mentions(violations, "backend.truth"));
}

TEST_CASE("dangling paths are named in the violation") {
  ConfigFixture f;
  f.base["corpus"] = f.dir.file("missing.csv");
  const auto violations = RunConfig::from_json(f.base).validate();
  CHECK(mentions(violations, "missing.csv"));
}

TEST_CASE("api_key accepts only environment interpolation") {
  ConfigFixture f;
  f.base["backend"] = {{"kind", "http"},
                       {"base_url", "https://api.example.com"},
                       {"model", "m-1"},
                       {"api_key", "${MY_KEY}"}};
  const auto ok = RunConfig::from_json(f.base);
  CHECK(ok.api_key_env == "MY_KEY");
  CHECK(ok.validate().empty());

  // A literal secret is rejected with a pointed message and is not kept
  // anywhere in the parsed config.
  f.base["backend"]["api_key"] = "sk-live-123456";
  const auto bad = RunConfig::from_json(f.base);
  const auto violations = bad.validate();
  CHECK(mentions(violations, "environment interpolation"));
  CHECK(bad.api_key_env.empty());
  CHECK(bad.to_json().dump().find("sk-live") == std::string::npos);
}

TEST_CASE("api_key_env names the variable directly") {
  ConfigFixture f;
  f.base["backend"] = {{"kind", "http"},
                       {"base_url", "https://api.example.com"},
                       {"model", "m-1"},
                       {"api_key_env", "OTHER_KEY"}};
  CHECK(RunConfig::from_json(f.base).api_key_env == "OTHER_KEY");
}

TEST_CASE("http backend requires url and model") {
  ConfigFixture f;
  f.base["backend"] = {{"kind", "http"}};
  const auto violations = RunConfig::from_json(f.base).validate();
  CHECK(mentions(violations, "backend.base_url"));
  CHECK(mentions(violations, "backend.model"));
}

TEST_CASE("backoff default depends on the backend kind") {
  ConfigFixture f;
  auto config = RunConfig::from_json(f.base);
  CHECK(config.backoff_base() == 0.0);  // synthetic: no point in waiting
  config.backend_kind = BackendKind::Http;
  CHECK(config.backoff_base() == 1.0);
  config.backoff_base_s = 2.5;
  CHECK(config.backoff_base() == 2.5);
}

TEST_CASE("delphi rankings and variants require ratings") {
  ConfigFixture f;
  testutil::write_file(f.dir.file("rankings.csv"),
                       "round,expert_id,profile_id,rank\n1,e1,p1,1\n");
  f.base["delphi"] = {{"rankings", f.dir.file("rankings.csv")}};
  const auto violations = RunConfig::from_json(f.base).validate();
  CHECK(mentions(violations, "delphi.ratings"));
}

TEST_CASE("unknown enum tokens fail at parse time") {
  ConfigFixture f;
  f.base["backend"]["kind"] = "telepathy";
  CHECK_THROWS_AS(RunConfig::from_json(f.base), ConfigError);
  f.base["backend"]["kind"] = "synthetic";
  f.base["coherence"] = {{"tie_policy", "shrug"}};
  CHECK_THROWS_AS(RunConfig::from_json(f.base), ConfigError);
}

TEST_CASE("config echo round-trips through json") {
  ConfigFixture f;
  f.base["repetitions"] = 7;
  f.base["parallelism"] = 3;
  f.base["coherence"] = {{"mode", "Exhaustive"}, {"n_triplets", 123}};
  f.base["report"] = {{"alignment_scope", "CrossSectionOnly"}};
  const auto config = RunConfig::from_json(f.base);
  const auto echoed = RunConfig::from_json(config.to_json());
  CHECK(echoed.repetitions == 7);
  CHECK(echoed.parallelism == 3);
  CHECK(echoed.transitivity_triplets == 123);
  CHECK(echoed.transitivity_mode == TransitivityMode::Exhaustive);
  CHECK(echoed.alignment_scope == WinRateScope::CrossSectionOnly);
  CHECK(echoed.schedule_seed == config.schedule_seed);
  CHECK(echoed.backend_kind == config.backend_kind);
  CHECK(echoed.truth_path == config.truth_path);
}

TEST_CASE("load records where the config came from") {
  ConfigFixture f;
  testutil::write_file(f.dir.file("run.json"), f.base.dump());
  const auto config = RunConfig::load(f.dir.file("run.json"));
  CHECK(config.config_path == f.dir.file("run.json"));
  CHECK(config.validate().empty());
  CHECK_THROWS_AS(RunConfig::load(f.dir.file("nope.json")), ConfigError);
}

}  // TEST_SUITE
