#include "syllogic/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "syllogic/hash.hpp"

namespace syllogic {
namespace {

using nlohmann::json;

constexpr std::string_view kLabelWords[3] = {"entailment", "contradiction", "neutral"};
constexpr Label kLabels[3] = {Label::Entailment, Label::Contradiction, Label::Neutral};

char fold(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_word_char(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool equals_folded(std::string_view a, std::string_view word) {
  if (a.size() != word.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (fold(a[i]) != word[i]) return false;
  }
  return true;
}

// Position of the first word-boundary, case-folded occurrence, or npos.
std::size_t find_word(std::string_view haystack, std::string_view word) {
  if (haystack.size() < word.size()) return std::string_view::npos;
  for (std::size_t i = 0; i + word.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < word.size() && match; ++j) {
      match = fold(haystack[i + j]) == word[j];
    }
    if (!match) continue;
    const bool left_ok = i == 0 || !is_word_char(haystack[i - 1]);
    const std::size_t end = i + word.size();
    const bool right_ok = end == haystack.size() || !is_word_char(haystack[end]);
    if (left_ok && right_ok) return i;
  }
  return std::string_view::npos;
}

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string parsed_to_string(const std::optional<Label>& parsed) {
  return parsed ? to_string(*parsed) : "invalid";
}

std::optional<Label> parsed_from_string(const std::string& s, int line) {
  if (s == "invalid") return std::nullopt;
  try {
    return label_from_string(s);
  } catch (const SchemaError&) {
    throw SchemaError("line " + std::to_string(line) + ": field 'parsed': unknown value \"" +
                      s + "\"");
  }
}

json manifest_to_json(const RunManifest& m) {
  return json{{"run_id", m.run_id},
              {"dataset_hash", m.dataset_hash},
              {"suite_id", m.suite_id},
              {"premise_language", m.pairing.premise_language},
              {"hypothesis_language", m.pairing.hypothesis_language},
              {"model", m.model},
              {"temperature", m.decoding.temperature},
              {"max_new_tokens", m.decoding.max_new_tokens},
              {"parse_mode", to_string(m.parse_mode)},
              {"dataset_count", m.dataset_count},
              {"started_at", m.started_at},
              {"finished_at", m.finished_at}};
}

template <typename T>
T field(const json& j, const char* name, int line) {
  if (!j.contains(name)) {
    throw SchemaError("line " + std::to_string(line) + ": missing field '" + name + "'");
  }
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw SchemaError("line " + std::to_string(line) + ": field '" + name +
                      "' has the wrong type");
  }
}

RunManifest manifest_from_json(const json& j, int line) {
  RunManifest m;
  m.run_id = field<std::string>(j, "run_id", line);
  m.dataset_hash = field<std::string>(j, "dataset_hash", line);
  m.suite_id = field<std::string>(j, "suite_id", line);
  m.pairing.premise_language = field<std::string>(j, "premise_language", line);
  m.pairing.hypothesis_language = field<std::string>(j, "hypothesis_language", line);
  m.model = field<std::string>(j, "model", line);
  m.decoding.temperature = field<double>(j, "temperature", line);
  m.decoding.max_new_tokens = field<int>(j, "max_new_tokens", line);
  m.parse_mode = parse_mode_from_string(field<std::string>(j, "parse_mode", line));
  m.dataset_count = field<std::uint64_t>(j, "dataset_count", line);
  m.started_at = field<std::string>(j, "started_at", line);
  m.finished_at = field<std::string>(j, "finished_at", line);
  if (j.contains("completed_ids")) {
    for (const json& id : j.at("completed_ids")) {
      m.completed_ids.insert(id.get<std::string>());
    }
  }
  return m;
}

void write_manifest_file(const RunManifest& m, const std::filesystem::path& path) {
  json j = manifest_to_json(m);
  j["completed_ids"] = m.completed_ids;
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest " + tmp.string());
    out << j.dump() << "\n";
  }
  std::filesystem::rename(tmp, path);
}

std::optional<RunManifest> read_manifest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string line;
  std::getline(in, line);
  try {
    return manifest_from_json(json::parse(line), 1);
  } catch (const json::exception& e) {
    throw SchemaError("manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::string to_string(ParseMode m) {
  return m == ParseMode::Strict ? "strict" : "lenient";
}

ParseMode parse_mode_from_string(std::string_view s) {
  if (s == "strict") return ParseMode::Strict;
  if (s == "lenient") return ParseMode::Lenient;
  throw SchemaError("unknown parse mode \"" + std::string(s) + "\"");
}

std::optional<Label> parse_answer(std::string_view raw, ParseMode mode) {
  if (mode == ParseMode::Strict) {
    const std::string_view t = trim(raw);
    for (int i = 0; i < 3; ++i) {
      if (equals_folded(t, kLabelWords[i])) return kLabels[i];
    }
    return std::nullopt;
  }
  std::size_t best_pos = std::string_view::npos;
  std::optional<Label> best;
  for (int i = 0; i < 3; ++i) {
    const std::size_t pos = find_word(raw, kLabelWords[i]);
    if (pos < best_pos) {
      best_pos = pos;
      best = kLabels[i];
    }
  }
  return best;
}

std::string build_prompt(const std::string& premise_text,
                         const std::string& hypothesis_text) {
  if (premise_text.empty() || hypothesis_text.empty()) {
    throw ContractError("prompt texts must be nonempty");
  }
  return "Premise: " + premise_text + "\nHypothesis: " + hypothesis_text +
         "\nQuestion: Is the hypothesis entailed by the premise, contradicted by it, "
         "or unrelated?\nAnswer with one of: Entailment, Contradiction, Neutral.\nAnswer:";
}

std::string build_prompt(const RealizedExample& example) {
  return build_prompt(example.premise_text, example.hypothesis_text);
}

std::string dataset_hash(const Dataset& dataset) {
  std::string material = "dataset";
  const DatasetMetadata& m = dataset.metadata;
  for (const std::string& part : {m.suite_id, m.pairing.premise_language,
                                  m.pairing.hypothesis_language, m.template_hash,
                                  m.lexicon_hash}) {
    material += '\x1f';
    material += part;
  }
  for (const RealizedExample& ex : dataset.examples) {
    material += '\x1f';
    material += ex.abstract_id;
    material += '\x1e';
    material += ex.premise_text;
    material += '\x1e';
    material += ex.hypothesis_text;
    material += '\x1e';
    material += to_string(ex.label);
  }
  return short_hash(material);
}

std::string run_id_for(const Dataset& dataset, const std::string& model,
                       const DecodingConfig& decoding, ParseMode mode) {
  char temp_buf[64];
  auto [ptr, ec] = std::to_chars(temp_buf, temp_buf + sizeof temp_buf, decoding.temperature);
  std::string material = "run";
  for (const std::string& part :
       {dataset_hash(dataset), model, std::string(temp_buf, ptr),
        std::to_string(decoding.max_new_tokens), to_string(mode)}) {
    material += '\x1f';
    material += part;
  }
  return short_hash(material);
}

EvalOutcome run_eval(const Dataset& dataset, const Gateway& gateway,
                     const DecodingConfig& decoding, ParseMode mode,
                     const std::filesystem::path& run_dir) {
  if (dataset.examples.empty()) throw ContractError("cannot evaluate an empty dataset");
  std::filesystem::create_directories(run_dir);

  EvalOutcome outcome;
  RunManifest& manifest = outcome.manifest;
  manifest.run_id = run_id_for(dataset, gateway.config().model, decoding, mode);
  manifest.dataset_hash = dataset_hash(dataset);
  manifest.suite_id = dataset.metadata.suite_id;
  manifest.pairing = dataset.metadata.pairing;
  manifest.model = gateway.config().model;
  manifest.decoding = decoding;
  manifest.parse_mode = mode;
  manifest.dataset_count = dataset.examples.size();
  manifest.started_at = now_utc();

  const std::filesystem::path manifest_path =
      run_dir / (manifest.run_id + ".manifest.json");
  if (auto previous = read_manifest_file(manifest_path)) {
    if (previous->run_id == manifest.run_id) {
      manifest.started_at = previous->started_at;
      manifest.completed_ids = std::move(previous->completed_ids);
    }
  }

  const std::size_t n = dataset.examples.size();
  std::vector<std::optional<PredictionRecord>> slots(n);
  std::vector<std::string> failures;
  std::mutex state_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      const RealizedExample& ex = dataset.examples[i];
      try {
        const ChatResult reply = gateway.chat(build_prompt(ex), decoding);
        PredictionRecord rec;
        rec.abstract_id = ex.abstract_id;
        rec.pairing = ex.pairing;
        rec.gold = ex.label;
        rec.raw_response = reply.text;
        rec.parsed = parse_answer(reply.text, mode);
        rec.from_cache = reply.from_cache;
        std::lock_guard<std::mutex> lock(state_mutex);
        slots[i] = std::move(rec);
        manifest.completed_ids.insert(ex.abstract_id);
        write_manifest_file(manifest, manifest_path);
      } catch (const GatewayError&) {
        std::lock_guard<std::mutex> lock(state_mutex);
        failures.push_back(ex.abstract_id);
      }
    }
  };

  const std::size_t pool =
      std::min<std::size_t>(static_cast<std::size_t>(gateway.config().parallelism), n);
  std::vector<std::thread> threads;
  threads.reserve(pool);
  for (std::size_t i = 0; i < pool; ++i) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();

  for (std::optional<PredictionRecord>& slot : slots) {
    if (slot) outcome.records.push_back(std::move(*slot));
  }
  std::sort(outcome.records.begin(), outcome.records.end(),
            [](const PredictionRecord& a, const PredictionRecord& b) {
              return a.abstract_id < b.abstract_id;
            });
  std::sort(failures.begin(), failures.end());
  outcome.failed_ids = std::move(failures);
  if (outcome.complete()) {
    manifest.finished_at = now_utc();
    write_manifest_file(manifest, manifest_path);
  }
  return outcome;
}

void write_predictions(const EvalOutcome& outcome, const std::filesystem::path& path) {
  if (!outcome.complete()) {
    throw ContractError("refusing to write predictions for an incomplete run (" +
                        std::to_string(outcome.failed_ids.size()) + " failed ids)");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write predictions file " + path.string());
  out << manifest_to_json(outcome.manifest).dump() << "\n";
  for (const PredictionRecord& rec : outcome.records) {
    const json j{{"abstract_id", rec.abstract_id},
                 {"premise_language", rec.pairing.premise_language},
                 {"hypothesis_language", rec.pairing.hypothesis_language},
                 {"gold", to_string(rec.gold)},
                 {"raw_response", rec.raw_response},
                 {"parsed", parsed_to_string(rec.parsed)},
                 {"from_cache", rec.from_cache}};
    out << j.dump() << "\n";
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

Predictions read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open predictions file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("line 1: missing manifest header");
  Predictions out;
  try {
    out.manifest = manifest_from_json(json::parse(line), 1);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("line 1: ") + e.what());
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    PredictionRecord rec;
    rec.abstract_id = field<std::string>(j, "abstract_id", line_no);
    rec.pairing.premise_language = field<std::string>(j, "premise_language", line_no);
    rec.pairing.hypothesis_language = field<std::string>(j, "hypothesis_language", line_no);
    rec.gold = label_from_string(field<std::string>(j, "gold", line_no));
    rec.raw_response = field<std::string>(j, "raw_response", line_no);
    rec.parsed = parsed_from_string(field<std::string>(j, "parsed", line_no), line_no);
    rec.from_cache = field<bool>(j, "from_cache", line_no);
    if (!out.records.empty() && !(out.records.back().abstract_id < rec.abstract_id)) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": records are not strictly sorted by abstract_id");
    }
    out.records.push_back(std::move(rec));
  }
  if (out.records.size() != out.manifest.dataset_count) {
    throw SchemaError("manifest declares " + std::to_string(out.manifest.dataset_count) +
                      " records but the file holds " + std::to_string(out.records.size()));
  }
  return out;
}

}  // namespace syllogic
