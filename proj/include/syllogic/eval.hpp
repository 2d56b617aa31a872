#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "syllogic/dataset.hpp"
#include "syllogic/gateway.hpp"

namespace syllogic {

enum class ParseMode { Strict, Lenient };

std::string to_string(ParseMode m);
ParseMode parse_mode_from_string(std::string_view s);

// Strict: trim surrounding whitespace, fold ASCII case, require an exact
// label word. Lenient: the first word-boundary occurrence of any label word
// wins. No match is nullopt; invalid answers are values, never errors.
std::optional<Label> parse_answer(std::string_view raw, ParseMode mode);

// The evaluation prompt, bit for bit. Five LF-separated lines; the last
// line is "Answer:" with nothing after it.
std::string build_prompt(const std::string& premise_text,
                         const std::string& hypothesis_text);
std::string build_prompt(const RealizedExample& example);

struct PredictionRecord {
  std::string abstract_id;
  Pairing pairing;
  Label gold = Label::Entailment;
  std::string raw_response;
  std::optional<Label> parsed;  // nullopt = invalid
  bool from_cache = false;

  bool operator==(const PredictionRecord&) const = default;
};

struct RunManifest {
  std::string run_id;
  std::string dataset_hash;
  std::string suite_id;
  Pairing pairing;
  std::string model;
  DecodingConfig decoding;
  ParseMode parse_mode = ParseMode::Strict;
  std::uint64_t dataset_count = 0;
  std::string started_at;   // ISO 8601 UTC
  std::string finished_at;  // empty while the run is incomplete
  std::set<std::string> completed_ids;

  bool complete() const { return completed_ids.size() == dataset_count; }
};

// Content hash of a dataset (metadata plus every example), so a run id
// pins exactly what was evaluated.
std::string dataset_hash(const Dataset& dataset);

// Stable id of an evaluation run: same dataset, model, decoding and parse
// mode always map to the same id, which is what makes resumption safe.
std::string run_id_for(const Dataset& dataset, const std::string& model,
                       const DecodingConfig& decoding, ParseMode mode);

struct EvalOutcome {
  std::vector<PredictionRecord> records;  // sorted by abstract_id
  RunManifest manifest;
  std::vector<std::string> failed_ids;  // sorted; empty iff the run completed

  bool complete() const { return failed_ids.empty(); }
};

// Evaluates every example, dispatching up to gateway.config().parallelism
// concurrent requests. Progress is persisted to <run_dir>/<run_id>.manifest.json
// after every completion; a rerun picks up from the manifest and the
// gateway cache, so completed ids never touch the network again. A gateway
// failure skips that id (listed in failed_ids) instead of aborting the run.
EvalOutcome run_eval(const Dataset& dataset, const Gateway& gateway,
                     const DecodingConfig& decoding, ParseMode mode,
                     const std::filesystem::path& run_dir);

// Predictions file: manifest header line, then one record per line in
// abstract_id order. Writing an incomplete outcome is a contract violation.
void write_predictions(const EvalOutcome& outcome, const std::filesystem::path& path);

struct Predictions {
  RunManifest manifest;
  std::vector<PredictionRecord> records;
};

Predictions read_predictions(const std::filesystem::path& path);

}  // namespace syllogic
