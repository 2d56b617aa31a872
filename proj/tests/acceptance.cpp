#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "support/helpers.hpp"
#include "support/mock_endpoints.hpp"
#include "support/universe_oracle.hpp"
#include "syllogic/dataset.hpp"
#include "syllogic/eval.hpp"
#include "syllogic/gateway.hpp"
#include "syllogic/lexicon.hpp"
#include "syllogic/logic.hpp"
#include "syllogic/report.hpp"

using namespace syllogic;
namespace fs = std::filesystem;

namespace {

const char* kLexiconPath = ASSETS_DIR "/lexicon.json";

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

const Lexicon& asset_lexicon() {
  static const Lexicon lexicon = Lexicon::load(kLexiconPath);
  return lexicon;
}

SuiteConfig full_config() {
  SuiteConfig sc;
  sc.languages = {"en", "de", "fr", "ar", "hi", "sw"};
  sc.count = 999;
  sc.seed = 42;
  sc.templates = builtin_templates();
  return sc;
}

// Built once; the shape and audit criteria inspect the same suite.
const Suite& full_suite() {
  static const Suite suite = build_suite(full_config(), asset_lexicon());
  return suite;
}

GatewayConfig mock_gateway_config(const std::string& url, const std::string& model,
                                  const fs::path& cache_dir) {
  GatewayConfig gc;
  gc.endpoint_url = url;
  gc.model = model;
  gc.parallelism = 2;
  gc.retries = 2;
  gc.backoff_base_ms = 1;
  gc.cache_dir = cache_dir;
  return gc;
}

std::map<Label, int> label_counts(const Dataset& dataset) {
  std::map<Label, int> counts;
  for (const RealizedExample& ex : dataset.examples) ++counts[ex.label];
  return counts;
}

}  // namespace

TEST_CASE("oracle agreement") {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<ConceptId> pool{"c0", "c1", "c2"};
  const Quantifier quantifiers[] = {Quantifier::All, Quantifier::Some, Quantifier::No};

  int cases = 0;
  int agreements = 0;
  for (Quantifier pq : quantifiers) {
    for (Quantifier hq : quantifiers) {
      for (std::size_t ps = 0; ps < pool.size(); ++ps) {
        for (std::size_t pp = 0; pp < pool.size(); ++pp) {
          if (ps == pp) continue;
          for (std::size_t hs = 0; hs < pool.size(); ++hs) {
            for (std::size_t hp = 0; hp < pool.size(); ++hp) {
              if (hs == hp) continue;
              const Statement premise(pq, pool[ps], pool[pp]);
              const Statement hypothesis(hq, pool[hs], pool[hp]);
              ++cases;
              if (classify_pair(premise, hypothesis) ==
                  oracle::classify(premise, hypothesis)) {
                ++agreements;
              }
            }
          }
        }
      }
    }
  }
  REQUIRE(cases == 9 * 36);
  CHECK(agreements == cases);
  CHECK(seconds_since(start) < 5.0);
}

TEST_CASE("verified builtin templates") {
  const std::vector<Template> templates = builtin_templates();
  REQUIRE(templates.size() == 3);
  CHECK(templates[0].declared_label == Label::Entailment);
  CHECK(templates[1].declared_label == Label::Contradiction);
  CHECK(templates[2].declared_label == Label::Neutral);

  const Binding binding{{SlotVar::A, "monkeys"},
                        {SlotVar::B, "organisms"},
                        {SlotVar::C, "reptiles"}};
  for (const Template& tpl : templates) {
    CAPTURE(tpl.id);
    const AbstractExample ex = instantiate(tpl, binding);
    CHECK(ex.label == tpl.declared_label);
  }

  // Converting "All monkeys are organisms" does not weaken it to neutrality:
  // under existential import the converse Some statement is entailed, and a
  // template claiming otherwise must not survive validation.
  const Statement premise(Quantifier::All, "monkeys", "organisms");
  const Statement hypothesis(Quantifier::Some, "organisms", "monkeys");
  CHECK(classify_pair(premise, hypothesis) == Label::Entailment);

  const Template conversion_as_neutral{
      "conversion-as-neutral", TemplatePattern(Quantifier::All, SlotVar::A, SlotVar::B),
      TemplatePattern(Quantifier::Some, SlotVar::B, SlotVar::A), Label::Neutral};
  CHECK_THROWS_AS(validate_template(conversion_as_neutral), ValidationError);
}

TEST_CASE("suite shape and determinism") {
  const auto start = std::chrono::steady_clock::now();
  const Suite& suite = full_suite();
  REQUIRE(suite.datasets.size() == 36);

  std::vector<std::string> reference_ids;
  for (const RealizedExample& ex : suite.datasets[0].examples) {
    reference_ids.push_back(ex.abstract_id);
  }
  for (const Dataset& ds : suite.datasets) {
    CAPTURE(ds.metadata.pairing.premise_language);
    CAPTURE(ds.metadata.pairing.hypothesis_language);
    REQUIRE(ds.examples.size() == 999);
    const auto counts = label_counts(ds);
    CHECK(counts.at(Label::Entailment) == 333);
    CHECK(counts.at(Label::Contradiction) == 333);
    CHECK(counts.at(Label::Neutral) == 333);

    std::vector<std::string> ids;
    for (const RealizedExample& ex : ds.examples) ids.push_back(ex.abstract_id);
    CHECK(ids == reference_ids);
  }

  testing::TempDir td;
  write_suite(suite, td / "one");
  const Suite rebuilt = build_suite(full_config(), asset_lexicon());
  write_suite(rebuilt, td / "two");

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(td / "one")) {
    names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  REQUIRE(names.size() == 37);
  for (const std::string& name : names) {
    CAPTURE(name);
    CHECK(testing::read_file(td / "one" / name) ==
          testing::read_file(td / "two" / name));
  }
  CHECK(seconds_since(start) < 60.0);
}

TEST_CASE("gold label audit") {
  const Suite& suite = full_suite();
  testing::TempDir td;
  write_suite(suite, td / "suite");

  int examples = 0;
  int mismatches = 0;
  for (const Dataset& built : suite.datasets) {
    const Dataset ds = read_jsonl(td / "suite" / dataset_filename(built.metadata.pairing));
    for (const RealizedExample& ex : ds.examples) {
      ++examples;
      const auto premise = parse_statement(ex.premise_text,
                                           ds.metadata.pairing.premise_language,
                                           asset_lexicon());
      const auto hypothesis = parse_statement(ex.hypothesis_text,
                                              ds.metadata.pairing.hypothesis_language,
                                              asset_lexicon());
      if (!premise || !hypothesis || classify_pair(*premise, *hypothesis) != ex.label) {
        ++mismatches;
        if (mismatches == 1) {
          CAPTURE(ex.premise_text);
          CAPTURE(ex.hypothesis_text);
        }
      }
    }
  }
  CHECK(examples == 36 * 999);
  CHECK(mismatches == 0);
}

TEST_CASE("mock endpoint evaluation") {
  testing::TempDir td;
  SuiteConfig sc;
  sc.languages = {"en", "de"};
  sc.count = 9;
  sc.seed = 19;
  sc.templates = builtin_templates();
  const Suite suite = build_suite(sc, asset_lexicon());
  const DecodingConfig decoding;

  mock::ChatServer oracle(mock::oracle_responder(asset_lexicon()));
  const Gateway oracle_gw(
      mock_gateway_config(oracle.url(), "oracle", td / "cache-oracle"));
  for (const Dataset& ds : suite.datasets) {
    CAPTURE(ds.metadata.pairing.premise_language);
    CAPTURE(ds.metadata.pairing.hypothesis_language);
    const EvalOutcome out =
        run_eval(ds, oracle_gw, decoding, ParseMode::Strict, td / "runs-oracle");
    REQUIRE(out.complete());
    const CellResult cell = score(out.records);
    CHECK(cell.accuracy == 1.0);
    CHECK(cell.invalid == 0);
  }

  mock::ChatServer constant([](const std::string&) { return std::string("Entailment"); });
  const Gateway constant_gw(
      mock_gateway_config(constant.url(), "constant", td / "cache-constant"));
  const EvalOutcome fixed = run_eval(suite.datasets[0], constant_gw, decoding,
                                     ParseMode::Strict, td / "runs-constant");
  REQUIRE(fixed.complete());
  const CellResult fixed_cell = score(fixed.records);
  CHECK(std::abs(fixed_cell.accuracy - 1.0 / 3.0) <=
        1.0 / static_cast<double>(fixed_cell.n));

  mock::ChatServer prose([](const std::string&) {
    return std::string("I believe the premise supports the hypothesis here.");
  });
  const Gateway prose_gw(
      mock_gateway_config(prose.url(), "prose", td / "cache-prose"));
  const EvalOutcome rambling = run_eval(suite.datasets[0], prose_gw, decoding,
                                        ParseMode::Strict, td / "runs-prose");
  REQUIRE(rambling.complete());
  const CellResult prose_cell = score(rambling.records);
  CHECK(prose_cell.accuracy == 0.0);
  CHECK(prose_cell.invalid == prose_cell.n);
}

TEST_CASE("score bucketing") {
  CHECK(bucket(67.0) == Bucket::AtLeast60);
  CHECK(bucket(29.4) == Bucket::Below30);
  CHECK(bucket(30.0) == Bucket::From30to35);
  CHECK(to_string(Bucket::AtLeast60) == ">=60");
  CHECK(to_string(Bucket::Below30) == "<30");
  CHECK(to_string(Bucket::From30to35) == "30-35");
}

TEST_CASE("embedding cosine") {
  const std::vector<double> v{0.3, -1.7, 2.2, 0.05};
  CHECK(std::abs(cosine(v, v) - 1.0) < 1e-9);
  CHECK(std::abs(cosine({1.0, 1.0}, {1.0, 0.0}) - 0.70710678) < 1e-8);

  // The constant embedder maps every text to (3, 4), whose norm is exactly 5,
  // so every pairwise cosine is 25 / 25 with no rounding anywhere.
  testing::TempDir td;
  mock::EmbedServer embed(
      [](const std::string&) { return std::vector<double>{3.0, 4.0}; });
  const Gateway gw(mock_gateway_config(embed.url(), "embedder", td / "cache"));
  const QualityRow row = translation_quality({"one text", "another", "a third"},
                                             {"ein Text", "noch einer", "ein dritter"},
                                             "de", gw);
  CHECK(row.sample_size == 3);
  CHECK(row.mean_cosine == 1.0);
}

TEST_CASE("resume determinism") {
  testing::TempDir td;
  SuiteConfig sc;
  sc.languages = {"en"};
  sc.count = 9;
  sc.seed = 23;
  sc.templates = builtin_templates();
  const Dataset dataset = build_suite(sc, asset_lexicon()).datasets[0];
  const DecodingConfig decoding;

  mock::ChatServer oracle(mock::oracle_responder(asset_lexicon()));
  oracle.fail_after(5);

  const Gateway gw(mock_gateway_config(oracle.url(), "oracle", td / "cache"));
  const EvalOutcome broken =
      run_eval(dataset, gw, decoding, ParseMode::Strict, td / "runs");
  REQUIRE(!broken.complete());
  CHECK(broken.records.size() == 5);
  CHECK(broken.failed_ids.size() == 4);

  oracle.recover();
  const EvalOutcome healed =
      run_eval(dataset, gw, decoding, ParseMode::Strict, td / "runs");
  REQUIRE(healed.complete());
  REQUIRE(healed.records.size() == 9);

  GatewayConfig clean = mock_gateway_config(oracle.url(), "oracle", td / "cache-ref");
  const Gateway reference_gw(clean);
  const EvalOutcome reference =
      run_eval(dataset, reference_gw, decoding, ParseMode::Strict, td / "runs-ref");
  REQUIRE(reference.complete());
  REQUIRE(reference.records.size() == healed.records.size());

  int cached = 0;
  for (std::size_t i = 0; i < healed.records.size(); ++i) {
    const PredictionRecord& h = healed.records[i];
    const PredictionRecord& r = reference.records[i];
    CHECK(h.abstract_id == r.abstract_id);
    CHECK(h.pairing == r.pairing);
    CHECK(h.gold == r.gold);
    CHECK(h.raw_response == r.raw_response);
    CHECK(h.parsed == r.parsed);
    if (h.from_cache) ++cached;
  }
  CHECK(cached >= 5);
  CHECK(healed.manifest.run_id == reference.manifest.run_id);
}

namespace {

// One verdict line per criterion, printed alongside the normal output.
class CriterionLines : public doctest::IReporter {
 public:
  explicit CriterionLines(const doctest::ContextOptions&) {}

  void test_case_start(const doctest::TestCaseData& tc) override { name_ = tc.m_name; }
  void test_case_end(const doctest::CurrentTestCaseStats& stats) override {
    std::printf("[acceptance] %s: %s\n", name_, stats.testCaseSuccess ? "PASS" : "FAIL");
    std::fflush(stdout);
  }

  void report_query(const doctest::QueryData&) override {}
  void test_run_start() override {}
  void test_run_end(const doctest::TestRunStats&) override {}
  void test_case_reenter(const doctest::TestCaseData&) override {}
  void test_case_exception(const doctest::TestCaseException&) override {}
  void subcase_start(const doctest::SubcaseSignature&) override {}
  void subcase_end() override {}
  void log_assert(const doctest::AssertData&) override {}
  void log_message(const doctest::MessageData&) override {}
  void test_case_skipped(const doctest::TestCaseData&) override {}

 private:
  const char* name_ = "";
};

}  // namespace

REGISTER_LISTENER("criteria", 1, CriterionLines);

int main(int argc, char** argv) {
  doctest::Context context(argc, argv);
  return context.run();
}
