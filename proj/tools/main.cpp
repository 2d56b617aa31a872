#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "syllogic/config.hpp"
#include "syllogic/dataset.hpp"
#include "syllogic/eval.hpp"
#include "syllogic/gateway.hpp"
#include "syllogic/lexicon.hpp"
#include "syllogic/report.hpp"

namespace fs = std::filesystem;
using namespace syllogic;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitGateway = 4;
constexpr int kExitIncomplete = 5;

// Subcommands are not safe to run concurrently against one output
// directory; the lock file makes that explicit.
class OutDirLock {
 public:
  explicit OutDirLock(const fs::path& out_dir) : path_(out_dir / ".lock") {
    fs::create_directories(out_dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw ConfigError("output directory " + out_dir.string() +
                        " is in use by another command (remove " + path_.string() +
                        " if that command is gone)");
    }
  }
  ~OutDirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }
  OutDirLock(const OutDirLock&) = delete;
  OutDirLock& operator=(const OutDirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    out += ok ? c : '-';
  }
  return out.empty() ? "model" : out;
}

GatewayConfig gateway_config(const EndpointConfig& endpoint, const Config& cfg) {
  if (endpoint.endpoint_url.empty()) {
    throw ConfigError("no endpoint_url configured (set it in the config file or pass "
                      "--endpoint)");
  }
  if (endpoint.model.empty()) {
    throw ConfigError("no model id configured (set it in the config file or pass "
                      "--model)");
  }
  GatewayConfig gc;
  gc.endpoint_url = endpoint.endpoint_url;
  gc.model = endpoint.model;
  gc.api_key_env = endpoint.api_key_env;
  gc.parallelism = cfg.parallelism;
  gc.retries = cfg.retries;
  gc.backoff_base_ms = cfg.backoff_ms;
  gc.cache_dir = cfg.effective_cache_dir();
  return gc;
}

std::vector<fs::path> dataset_files(const std::vector<std::string>& datasets,
                                    const std::string& suite_dir) {
  std::vector<fs::path> files;
  for (const std::string& d : datasets) files.emplace_back(d);
  if (!suite_dir.empty()) {
    if (!fs::is_directory(suite_dir)) {
      throw ConfigError("suite directory " + suite_dir + " does not exist");
    }
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(suite_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("nli_", 0) == 0 && entry.path().extension() == ".jsonl") {
        found.push_back(entry.path());
      }
    }
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  if (files.empty()) {
    throw ConfigError("nothing to evaluate: pass --dataset or --suite");
  }
  for (const fs::path& f : files) {
    if (!fs::is_regular_file(f)) {
      throw ConfigError("dataset file " + f.string() + " does not exist");
    }
  }
  return files;
}

int cmd_gen(const Config& cfg) {
  if (cfg.lexicon_path.empty()) throw ConfigError("gen needs --lexicon");
  if (cfg.languages.empty()) throw ConfigError("gen needs --languages");
  OutDirLock lock(cfg.out_dir);
  const Lexicon lexicon = Lexicon::load(cfg.lexicon_path);
  SuiteConfig sc;
  sc.languages = cfg.languages;
  sc.count = cfg.count;
  sc.seed = cfg.seed;
  sc.templates = resolve_templates(cfg.templates);
  const Suite suite = build_suite(sc, lexicon);
  const fs::path suite_dir = cfg.out_dir / suite.suite_id;
  const auto files = write_suite(suite, suite_dir);
  std::cout << "suite " << suite.suite_id << ": " << suite.datasets.size()
            << " datasets, " << suite.abstracts.size() << " examples each\n"
            << suite_dir.string() << "\n";
  return 0;
}

int cmd_eval(const Config& cfg, const std::vector<std::string>& datasets,
             const std::string& suite_dir, const DecodingConfig& decoding) {
  const auto files = dataset_files(datasets, suite_dir);
  OutDirLock lock(cfg.out_dir);
  const Gateway gateway(gateway_config(cfg.chat, cfg));
  const ParseMode mode = parse_mode_from_string(cfg.parsing_mode);
  const fs::path run_dir = cfg.out_dir / "evals";
  bool all_complete = true;
  for (const fs::path& file : files) {
    const Dataset dataset = read_jsonl(file);
    const EvalOutcome outcome = run_eval(dataset, gateway, decoding, mode, run_dir);
    if (outcome.complete()) {
      const fs::path out_path = run_dir / (outcome.manifest.run_id + ".jsonl");
      write_predictions(outcome, out_path);
      std::cout << "run " << outcome.manifest.run_id << " ("
                << dataset.metadata.pairing.premise_language << ", "
                << dataset.metadata.pairing.hypothesis_language << "): "
                << outcome.records.size() << " records -> " << out_path.string() << "\n";
    } else {
      all_complete = false;
      std::cerr << "run " << outcome.manifest.run_id << " incomplete: "
                << outcome.failed_ids.size() << " of " << dataset.examples.size()
                << " examples failed";
      std::cerr << " (first: " << outcome.failed_ids.front() << "); rerun to resume\n";
    }
  }
  return all_complete ? 0 : kExitIncomplete;
}

int cmd_report(const Config& cfg, const std::string& runs_dir_flag,
               ReportFormat format) {
  const fs::path runs_dir = runs_dir_flag.empty() ? cfg.out_dir / "evals"
                                                  : fs::path(runs_dir_flag);
  if (!fs::is_directory(runs_dir)) {
    throw ConfigError("runs directory " + runs_dir.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ConfigError("no prediction files in " + runs_dir.string());
  }

  std::map<std::string, std::vector<CellResult>> cells_by_model;
  std::map<std::string, std::set<std::string>> langs_by_model;
  for (const fs::path& file : files) {
    const Predictions preds = read_predictions(file);
    cells_by_model[preds.manifest.model].push_back(score(preds.records));
    langs_by_model[preds.manifest.model].insert(preds.manifest.pairing.premise_language);
    langs_by_model[preds.manifest.model].insert(
        preds.manifest.pairing.hypothesis_language);
  }

  OutDirLock lock(cfg.out_dir);
  const fs::path report_dir = cfg.out_dir / "reports";
  fs::create_directories(report_dir);
  for (const auto& [model, cells] : cells_by_model) {
    const auto& lang_set = langs_by_model[model];
    const std::vector<std::string> languages(lang_set.begin(), lang_set.end());
    const AccuracyMatrix m = matrix(cells, languages, model);
    const fs::path out_path =
        report_dir / ("matrix_" + sanitize(model) + report_extension(format));
    emit(m, format, out_path);
    std::cout << "model " << model << ": " << languages.size() << "x"
              << languages.size() << " matrix -> " << out_path.string() << "\n";
  }
  return 0;
}

int cmd_quality(const Config& cfg, const std::string& suite_dir,
                const std::vector<std::string>& languages_flag, std::uint64_t sample,
                double min_similarity, bool has_min, ReportFormat format) {
  if (suite_dir.empty()) throw ConfigError("quality needs --suite");
  const fs::path dir(suite_dir);
  const fs::path source_file = dir / dataset_filename(Pairing{"en", "en"});
  if (!fs::is_regular_file(source_file)) {
    throw ConfigError("quality needs the English dataset " + source_file.string());
  }
  const Dataset source = read_jsonl(source_file);

  std::vector<std::string> targets = languages_flag;
  if (targets.empty()) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("nli_", 0) != 0 || entry.path().extension() != ".jsonl") continue;
      const std::string stem = entry.path().stem().string();
      const std::size_t second = stem.rfind('_');
      const std::string hyp = stem.substr(second + 1);
      const std::string prem = stem.substr(4, second - 4);
      if (prem == hyp && prem != "en") targets.push_back(prem);
    }
    std::sort(targets.begin(), targets.end());
  }
  if (targets.empty()) {
    throw ConfigError("no target languages: the suite holds only English");
  }

  OutDirLock lock(cfg.out_dir);
  const Gateway gateway(gateway_config(cfg.embeddings, cfg));
  std::uint64_t n = std::min<std::uint64_t>(sample, source.examples.size());
  if (n < sample) {
    std::cerr << "sample clamped to " << n << " (dataset has only " << n
              << " examples)\n";
  }

  std::vector<std::string> source_texts;
  source_texts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    source_texts.push_back(source.examples[i].premise_text);
  }

  std::vector<QualityRow> rows;
  for (const std::string& lang : targets) {
    const fs::path target_file = dir / dataset_filename(Pairing{lang, lang});
    if (!fs::is_regular_file(target_file)) {
      throw ConfigError("no dataset for language \"" + lang + "\" (" +
                        target_file.string() + ")");
    }
    const Dataset target = read_jsonl(target_file);
    std::vector<std::string> target_texts;
    target_texts.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      if (target.examples[i].abstract_id != source.examples[i].abstract_id) {
        throw ValidationError("datasets are not aligned: example " +
                              std::to_string(i) + " differs between en and " + lang);
      }
      target_texts.push_back(target.examples[i].premise_text);
    }
    rows.push_back(translation_quality(source_texts, target_texts, lang, gateway));
  }

  const fs::path report_dir = cfg.out_dir / "reports";
  fs::create_directories(report_dir);
  const fs::path out_path = report_dir / ("quality" + report_extension(format));
  emit(rows, format, out_path);
  std::cout << render_quality(rows, ReportFormat::Csv) << "-> " << out_path.string()
            << "\n";

  if (has_min) {
    std::vector<std::string> below;
    for (const QualityRow& row : rows) {
      if (row.mean_cosine < min_similarity) {
        below.push_back(row.language);
      }
    }
    if (!below.empty()) {
      std::string joined;
      for (const std::string& l : below) joined += (joined.empty() ? "" : ", ") + l;
      throw ValidationError("mean cosine below threshold for: " + joined);
    }
  }
  return 0;
}

int cmd_validate(const std::string& lexicon_path, const std::string& templates_spec) {
  if (lexicon_path.empty()) throw ConfigError("validate needs --lexicon");
  const Lexicon lexicon = Lexicon::load(lexicon_path);
  const std::vector<Template> templates = resolve_templates(templates_spec);
  std::cout << "lexicon: " << lexicon.languages().size() << " languages, "
            << lexicon.concepts(ConceptRole::Specific).size() << " specific and "
            << lexicon.concepts(ConceptRole::Generic).size() << " generic concepts ("
            << lexicon.hash() << ")\n"
            << "templates: " << templates.size() << " verified ("
            << templates_hash(templates) << ")\nok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generates logically verified multilingual NLI suites and evaluates "
               "chat endpoints on them"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");
  std::string out_flag;
  app.add_option("--out", out_flag, "output directory");
  std::uint64_t seed_flag = 0;
  app.add_option("--seed", seed_flag, "generation seed");

  std::string lexicon_flag;
  std::string templates_flag;
  std::vector<std::string> languages_flag;
  std::uint64_t count_flag = 0;
  auto* gen = app.add_subcommand("gen", "generate a dataset suite");
  gen->add_option("--lexicon", lexicon_flag, "lexicon JSON file");
  gen->add_option("--templates", templates_flag, "template JSON file, or \"builtin\"");
  gen->add_option("--languages", languages_flag, "language codes")->delimiter(',');
  gen->add_option("--count", count_flag, "examples per dataset");

  std::vector<std::string> eval_datasets;
  std::string eval_suite;
  std::string endpoint_flag;
  std::string model_flag;
  std::string api_key_env_flag;
  std::string parse_flag;
  std::string cache_dir_flag;
  int parallelism_flag = 0;
  int retries_flag = 0;
  DecodingConfig decoding;
  auto* eval = app.add_subcommand("eval", "evaluate an endpoint on datasets");
  eval->add_option("--dataset", eval_datasets, "dataset JSONL file (repeatable)");
  eval->add_option("--suite", eval_suite, "suite directory (evaluates every dataset)");
  eval->add_option("--endpoint", endpoint_flag, "chat completions base URL");
  eval->add_option("--model", model_flag, "model id");
  eval->add_option("--api-key-env", api_key_env_flag,
                   "environment variable holding the API key");
  eval->add_option("--parse", parse_flag, "answer parsing: strict or lenient");
  eval->add_option("--temperature", decoding.temperature, "sampling temperature")
      ->capture_default_str();
  eval->add_option("--max-new-tokens", decoding.max_new_tokens, "completion budget")
      ->capture_default_str();
  eval->add_option("--parallelism", parallelism_flag, "concurrent requests");
  eval->add_option("--retries", retries_flag, "attempts per request");
  eval->add_option("--cache-dir", cache_dir_flag, "response cache directory");

  std::string runs_dir_flag;
  std::string format_flag = "markdown";
  auto* report = app.add_subcommand("report", "aggregate predictions into matrices");
  report->add_option("--runs", runs_dir_flag, "directory of prediction files");
  report->add_option("--format", format_flag, "csv, json or markdown")
      ->capture_default_str();

  std::string quality_suite;
  std::vector<std::string> quality_languages;
  std::uint64_t sample_flag = 100;
  double min_similarity = 0.0;
  auto* quality = app.add_subcommand("quality", "embedding cosine translation quality");
  quality->add_option("--suite", quality_suite, "suite directory");
  quality->add_option("--languages", quality_languages, "target languages")
      ->delimiter(',');
  quality->add_option("--sample", sample_flag, "aligned pairs per language")
      ->capture_default_str();
  auto* min_opt = quality->add_option("--min-similarity", min_similarity,
                                      "fail (exit 3) if any mean falls below this");
  quality->add_option("--endpoint", endpoint_flag, "embeddings base URL");
  quality->add_option("--model", model_flag, "embedding model id");
  quality->add_option("--api-key-env", api_key_env_flag,
                      "environment variable holding the API key");
  quality->add_option("--format", format_flag, "csv, json or markdown");

  auto* validate = app.add_subcommand("validate", "check a lexicon and templates");
  validate->add_option("--lexicon", lexicon_flag, "lexicon JSON file");
  validate->add_option("--templates", templates_flag,
                       "template JSON file, or \"builtin\"");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    Config cfg = config_path.empty() ? Config{} : load_config(config_path);
    if (app.count("--out")) cfg.out_dir = out_flag;
    if (app.count("--seed")) cfg.seed = seed_flag;
    if (gen->count("--lexicon") || validate->count("--lexicon")) {
      cfg.lexicon_path = lexicon_flag;
    }
    if (gen->count("--templates") || validate->count("--templates")) {
      cfg.templates = templates_flag;
    }
    if (gen->count("--languages")) cfg.languages = languages_flag;
    if (gen->count("--count")) cfg.count = count_flag;
    if (eval->count("--endpoint")) cfg.chat.endpoint_url = endpoint_flag;
    if (eval->count("--model")) cfg.chat.model = model_flag;
    if (eval->count("--api-key-env")) cfg.chat.api_key_env = api_key_env_flag;
    if (eval->count("--parse")) cfg.parsing_mode = parse_flag;
    if (eval->count("--parallelism")) cfg.parallelism = parallelism_flag;
    if (eval->count("--retries")) cfg.retries = retries_flag;
    if (eval->count("--cache-dir")) cfg.cache_dir = cache_dir_flag;
    if (quality->count("--endpoint")) cfg.embeddings.endpoint_url = endpoint_flag;
    if (quality->count("--model")) cfg.embeddings.model = model_flag;
    if (quality->count("--api-key-env")) cfg.embeddings.api_key_env = api_key_env_flag;

    if (gen->parsed()) return cmd_gen(cfg);
    if (eval->parsed()) return cmd_eval(cfg, eval_datasets, eval_suite, decoding);
    if (report->parsed()) {
      return cmd_report(cfg, runs_dir_flag, report_format_from_string(format_flag));
    }
    if (quality->parsed()) {
      return cmd_quality(cfg, quality_suite, quality_languages, sample_flag,
                         min_similarity, min_opt->count() > 0,
                         report_format_from_string(format_flag));
    }
    if (validate->parsed()) {
      return cmd_validate(cfg.lexicon_path.string(), cfg.templates);
    }
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GatewayError& e) {
    std::cerr << "gateway error: " << e.what() << "\n";
    return kExitGateway;
  } catch (const ValidationError& e) {
    std::cerr << "validation failed:\n";
    for (const std::string& issue : e.issues) std::cerr << "  - " << issue << "\n";
    return kExitValidation;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ExhaustionError& e) {
    std::cerr << "generation exhausted: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}
