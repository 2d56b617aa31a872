#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

#include "syllogic/lexicon.hpp"
#include "syllogic/logic.hpp"

namespace syllogic {

// Ordered language pair; L1 == L2 is the monolingual condition.
struct Pairing {
  std::string premise_language;
  std::string hypothesis_language;

  bool monolingual() const { return premise_language == hypothesis_language; }
  bool operator==(const Pairing&) const = default;
  bool operator<(const Pairing& o) const {
    return std::tie(premise_language, hypothesis_language) <
           std::tie(o.premise_language, o.hypothesis_language);
  }
};

struct RealizedExample {
  std::string abstract_id;
  Pairing pairing;
  std::string premise_text;
  std::string hypothesis_text;
  Label label;
  std::string template_id;

  bool operator==(const RealizedExample&) const = default;
};

struct DatasetMetadata {
  std::string suite_id;
  std::uint64_t seed = 0;
  Pairing pairing;
  std::uint64_t count = 0;
  std::string template_hash;
  std::string lexicon_hash;

  bool operator==(const DatasetMetadata&) const = default;
};

struct Dataset {
  DatasetMetadata metadata;
  std::vector<RealizedExample> examples;  // sorted by abstract_id

  bool operator==(const Dataset&) const = default;
};

struct SuiteConfig {
  std::vector<std::string> languages;
  std::uint64_t count = 999;
  std::uint64_t seed = 42;
  std::vector<Template> templates;  // validated; empty = builtin
};

// Samples `count` verified abstract examples, balanced over the three labels
// (difference at most 1, surplus assigned in the order entailment,
// contradiction, neutral). Bindings draw slot A from specific concepts and
// B/C from generic concepts using mt19937_64 with rejection sampling, so the
// output is identical on every platform. Duplicate (template_id, binding)
// combinations are never emitted; ExhaustionError if the vocabulary cannot
// supply enough distinct bindings.
std::vector<AbstractExample> generate_abstract(std::uint64_t count, std::uint64_t seed,
                                               const std::vector<Template>& templates,
                                               const Lexicon& lexicon);

// Realizes every abstract example with the premise in pairing.L1 and the
// hypothesis in pairing.L2. `base` supplies suite-level metadata (suite_id,
// seed, hashes); count is set from the abstracts.
Dataset realize_pairing(const std::vector<AbstractExample>& abstracts,
                        const Pairing& pairing, const Lexicon& lexicon,
                        const DatasetMetadata& base);

struct Suite {
  std::string suite_id;
  std::vector<AbstractExample> abstracts;
  std::vector<Dataset> datasets;  // |languages|^2, row-major over config order
};

// One dataset per ordered language pair (diagonal included); the same
// abstract set underlies every pairing.
Suite build_suite(const SuiteConfig& config, const Lexicon& lexicon);

// JSONL persistence. Line 1 is the metadata object, then one example per
// line; UTF-8 with LF endings. read_jsonl verifies the schema and the
// dataset invariants, naming the line and field of the first failure.
void write_jsonl(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_jsonl(const std::filesystem::path& path);

// Writes every dataset plus a suite.json manifest into `dir`. Output is a
// pure function of (config, lexicon): rerunning produces identical bytes.
// On failure all files created by this call are removed.
std::vector<std::filesystem::path> write_suite(const Suite& suite,
                                               const std::filesystem::path& dir);

std::string dataset_filename(const Pairing& pairing);

}  // namespace syllogic
