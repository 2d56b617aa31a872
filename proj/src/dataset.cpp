#include "syllogic/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <random>
#include <set>

#include <json.hpp>

#include "syllogic/hash.hpp"

namespace syllogic {
namespace {

using nlohmann::json;

// Uniform draw from [0, n) via rejection, so results do not depend on the
// standard library's distribution implementation.
std::uint64_t draw_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = n * (UINT64_MAX / n);
  for (;;) {
    const std::uint64_t u = rng();
    if (u < limit) return u % n;
  }
}

std::vector<SlotVar> slots_used(const Template& tpl) {
  std::vector<SlotVar> out;
  for (SlotVar s : {SlotVar::A, SlotVar::B, SlotVar::C}) {
    for (SlotVar used : {tpl.premise.subject_slot, tpl.premise.predicate_slot,
                         tpl.hypothesis.subject_slot, tpl.hypothesis.predicate_slot}) {
      if (used == s && std::find(out.begin(), out.end(), s) == out.end()) {
        out.push_back(s);
      }
    }
  }
  return out;
}

const std::vector<ConceptId>& pool_for(SlotVar slot,
                                       const std::vector<ConceptId>& specific,
                                       const std::vector<ConceptId>& generic) {
  return slot == SlotVar::A ? specific : generic;
}

// Number of distinct bindings a template admits: slots draw independently
// from their pools except that same-pool slots must take distinct concepts.
std::uint64_t possible_bindings(const Template& tpl, std::size_t n_specific,
                                std::size_t n_generic) {
  const auto slots = slots_used(tpl);
  std::uint64_t total = 1;
  std::size_t generic_taken = 0;
  for (SlotVar s : slots) {
    if (s == SlotVar::A) {
      total *= n_specific;
    } else {
      if (n_generic <= generic_taken) return 0;
      total *= n_generic - generic_taken;
      ++generic_taken;
    }
  }
  return total;
}

// Canonical enumeration of a template's bindings, used as the deterministic
// fallback when rejection sampling has nearly exhausted the space.
void for_each_binding(const Template& tpl, const std::vector<ConceptId>& specific,
                      const std::vector<ConceptId>& generic,
                      const std::function<bool(const Binding&)>& visit) {
  const auto slots = slots_used(tpl);
  Binding binding;
  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == slots.size()) return visit(binding);
    const auto& pool = pool_for(slots[i], specific, generic);
    for (const ConceptId& c : pool) {
      bool taken = false;
      for (const auto& [s, chosen] : binding) {
        if (chosen == c) taken = true;
      }
      if (taken) continue;
      binding[slots[i]] = c;
      if (rec(i + 1)) return true;
      binding.erase(slots[i]);
    }
    return false;
  };
  rec(0);
}

std::string binding_key(const std::string& template_id, const Binding& binding) {
  std::string key = template_id;
  for (const auto& [slot, concept_id] : binding) {
    key += "|" + to_string(slot) + ":" + concept_id;
  }
  return key;
}

json example_to_json(const RealizedExample& ex) {
  return json{{"id", ex.abstract_id},
              {"premise", ex.premise_text},
              {"hypothesis", ex.hypothesis_text},
              {"label", to_string(ex.label)},
              {"premise_language", ex.pairing.premise_language},
              {"hypothesis_language", ex.pairing.hypothesis_language},
              {"template_id", ex.template_id}};
}

const json& require_field(const json& j, const char* field, int line,
                          json::value_t type) {
  if (!j.contains(field)) {
    throw SchemaError("line " + std::to_string(line) + ": missing field '" + field + "'");
  }
  const json& v = j.at(field);
  const bool numeric_ok = type == json::value_t::number_unsigned && v.is_number_integer();
  if (v.type() != type && !numeric_ok) {
    throw SchemaError("line " + std::to_string(line) + ": field '" + field +
                      "' has the wrong type");
  }
  return v;
}

}  // namespace

std::vector<AbstractExample> generate_abstract(std::uint64_t count, std::uint64_t seed,
                                               const std::vector<Template>& templates,
                                               const Lexicon& lexicon) {
  if (count < 3) {
    throw ContractError("count must be at least 3 (one per label), got " +
                        std::to_string(count));
  }
  if (templates.empty()) throw ContractError("no templates supplied");
  for (const Template& t : templates) validate_template(t);

  const std::vector<ConceptId> specific = lexicon.concepts(ConceptRole::Specific);
  const std::vector<ConceptId> generic = lexicon.concepts(ConceptRole::Generic);

  // count/3 per label, surplus in label order.
  const Label label_order[3] = {Label::Entailment, Label::Contradiction, Label::Neutral};
  std::uint64_t quota[3];
  for (int i = 0; i < 3; ++i) quota[i] = count / 3 + (count % 3 > static_cast<std::uint64_t>(i) ? 1 : 0);

  std::mt19937_64 rng(seed);
  std::set<std::string> used;
  std::vector<AbstractExample> out;
  out.reserve(count);

  for (int li = 0; li < 3; ++li) {
    const Label label = label_order[li];
    std::vector<const Template*> pool;
    for (const Template& t : templates) {
      if (t.declared_label == label) pool.push_back(&t);
    }
    std::uint64_t capacity = 0;
    for (const Template* t : pool) {
      capacity += possible_bindings(*t, specific.size(), generic.size());
    }
    if (capacity < quota[li]) {
      throw ExhaustionError("label " + to_string(label) + " needs " +
                            std::to_string(quota[li]) + " distinct examples but the " +
                            "vocabulary only admits " + std::to_string(capacity) +
                            (pool.empty() ? " (no template declares this label)" : ""));
    }

    std::vector<std::uint64_t> taken(pool.size(), 0);
    std::vector<std::uint64_t> cap(pool.size());
    for (std::size_t ti = 0; ti < pool.size(); ++ti) {
      cap[ti] = possible_bindings(*pool[ti], specific.size(), generic.size());
    }

    std::size_t rotation = 0;
    for (std::uint64_t produced = 0; produced < quota[li]; ++produced) {
      // Round-robin across the label's templates, skipping exhausted ones.
      std::size_t ti = rotation % pool.size();
      for (std::size_t step = 0; step < pool.size() && taken[ti] >= cap[ti]; ++step) {
        ti = (ti + 1) % pool.size();
      }
      ++rotation;
      const Template& tpl = *pool[ti];
      const auto slots = slots_used(tpl);

      Binding binding;
      bool accepted = false;
      for (int attempt = 0; attempt < 64 && !accepted; ++attempt) {
        binding.clear();
        std::vector<const ConceptId*> chosen_generics;
        for (SlotVar s : slots) {
          const auto& p = pool_for(s, specific, generic);
          if (s == SlotVar::A) {
            binding[s] = p[draw_index(rng, p.size())];
          } else {
            // Skip-past-taken keeps the draw uniform over the remainder.
            std::uint64_t idx = draw_index(rng, p.size() - chosen_generics.size());
            for (std::size_t scan = 0; scan <= idx; ++scan) {
              for (const ConceptId* g : chosen_generics) {
                if (p[scan] == *g && scan <= idx) ++idx;
              }
            }
            binding[s] = p[idx];
            chosen_generics.push_back(&binding[s]);
          }
        }
        accepted = !used.count(binding_key(tpl.id, binding));
      }
      if (!accepted) {
        // Space nearly exhausted: take the first unused binding in canonical order.
        accepted = false;
        for_each_binding(tpl, specific, generic, [&](const Binding& b) {
          if (used.count(binding_key(tpl.id, b))) return false;
          binding = b;
          accepted = true;
          return true;
        });
        if (!accepted) {
          throw ExhaustionError("template \"" + tpl.id + "\" ran out of bindings");
        }
      }
      used.insert(binding_key(tpl.id, binding));
      ++taken[ti];
      out.push_back(instantiate(tpl, binding));
    }
  }

  std::sort(out.begin(), out.end(),
            [](const AbstractExample& a, const AbstractExample& b) { return a.id < b.id; });
  return out;
}

Dataset realize_pairing(const std::vector<AbstractExample>& abstracts,
                        const Pairing& pairing, const Lexicon& lexicon,
                        const DatasetMetadata& base) {
  if (abstracts.empty()) throw ContractError("cannot realize an empty abstract set");
  if (!lexicon.has_language(pairing.premise_language) ||
      !lexicon.has_language(pairing.hypothesis_language)) {
    throw ContractError("pairing (" + pairing.premise_language + ", " +
                        pairing.hypothesis_language + ") uses an unknown language");
  }
  Dataset ds;
  ds.metadata = base;
  ds.metadata.pairing = pairing;
  ds.metadata.count = abstracts.size();
  ds.examples.reserve(abstracts.size());
  for (const AbstractExample& ab : abstracts) {
    try {
      ds.examples.push_back(RealizedExample{
          ab.id, pairing, realize(ab.premise, pairing.premise_language, lexicon),
          realize(ab.hypothesis, pairing.hypothesis_language, lexicon), ab.label,
          ab.template_id});
    } catch (const Error& e) {
      throw ValidationError("realizing example " + ab.id + ": " + e.what());
    }
  }
  std::sort(ds.examples.begin(), ds.examples.end(),
            [](const RealizedExample& a, const RealizedExample& b) {
              return a.abstract_id < b.abstract_id;
            });
  return ds;
}

Suite build_suite(const SuiteConfig& config, const Lexicon& lexicon) {
  if (config.languages.empty()) throw ConfigError("no languages requested");
  std::set<std::string> unique_langs(config.languages.begin(), config.languages.end());
  if (unique_langs.size() != config.languages.size()) {
    throw ConfigError("duplicate language in suite configuration");
  }
  for (const std::string& lang : config.languages) {
    if (!lexicon.has_language(lang)) {
      throw ConfigError("language \"" + lang + "\" is not covered by the lexicon");
    }
  }
  const std::vector<Template> templates =
      config.templates.empty() ? builtin_templates() : config.templates;

  Suite suite;
  DatasetMetadata base;
  base.seed = config.seed;
  base.template_hash = templates_hash(templates);
  base.lexicon_hash = lexicon.hash();
  std::string langs_joined;
  for (const std::string& l : config.languages) langs_joined += l + ",";
  suite.suite_id = short_hash("suite|" + std::to_string(config.seed) + "|" +
                              std::to_string(config.count) + "|" + langs_joined + "|" +
                              base.template_hash + "|" + base.lexicon_hash);
  base.suite_id = suite.suite_id;

  suite.abstracts = generate_abstract(config.count, config.seed, templates, lexicon);
  for (const std::string& l1 : config.languages) {
    for (const std::string& l2 : config.languages) {
      suite.datasets.push_back(
          realize_pairing(suite.abstracts, Pairing{l1, l2}, lexicon, base));
    }
  }
  return suite;
}

void write_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw ConfigError("cannot write dataset file " + path.string());
  const DatasetMetadata& m = dataset.metadata;
  json header{{"suite_id", m.suite_id},
              {"seed", m.seed},
              {"premise_language", m.pairing.premise_language},
              {"hypothesis_language", m.pairing.hypothesis_language},
              {"count", m.count},
              {"template_hash", m.template_hash},
              {"lexicon_hash", m.lexicon_hash}};
  out << header.dump() << "\n";
  for (const RealizedExample& ex : dataset.examples) {
    out << example_to_json(ex).dump() << "\n";
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

Dataset read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset file " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("line 1: missing metadata header");
  }
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("line 1: ") + e.what());
  }
  Dataset ds;
  ds.metadata.suite_id =
      require_field(header, "suite_id", 1, json::value_t::string).get<std::string>();
  ds.metadata.seed =
      require_field(header, "seed", 1, json::value_t::number_unsigned).get<std::uint64_t>();
  ds.metadata.pairing.premise_language =
      require_field(header, "premise_language", 1, json::value_t::string).get<std::string>();
  ds.metadata.pairing.hypothesis_language =
      require_field(header, "hypothesis_language", 1, json::value_t::string).get<std::string>();
  ds.metadata.count =
      require_field(header, "count", 1, json::value_t::number_unsigned).get<std::uint64_t>();
  ds.metadata.template_hash =
      require_field(header, "template_hash", 1, json::value_t::string).get<std::string>();
  ds.metadata.lexicon_hash =
      require_field(header, "lexicon_hash", 1, json::value_t::string).get<std::string>();

  int line_no = 1;
  std::size_t label_counts[3] = {0, 0, 0};
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    RealizedExample ex;
    ex.abstract_id = require_field(j, "id", line_no, json::value_t::string).get<std::string>();
    ex.premise_text =
        require_field(j, "premise", line_no, json::value_t::string).get<std::string>();
    ex.hypothesis_text =
        require_field(j, "hypothesis", line_no, json::value_t::string).get<std::string>();
    const std::string label_str =
        require_field(j, "label", line_no, json::value_t::string).get<std::string>();
    try {
      ex.label = label_from_string(label_str);
    } catch (const SchemaError&) {
      throw SchemaError("line " + std::to_string(line_no) + ": field 'label': unknown label \"" +
                        label_str + "\"");
    }
    ex.pairing.premise_language =
        require_field(j, "premise_language", line_no, json::value_t::string).get<std::string>();
    ex.pairing.hypothesis_language =
        require_field(j, "hypothesis_language", line_no, json::value_t::string)
            .get<std::string>();
    ex.template_id =
        require_field(j, "template_id", line_no, json::value_t::string).get<std::string>();
    if (ex.pairing != ds.metadata.pairing) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": languages disagree with the metadata header");
    }
    if (!ds.examples.empty() && !(ds.examples.back().abstract_id < ex.abstract_id)) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": examples are not strictly sorted by id");
    }
    ++label_counts[static_cast<int>(ex.label)];
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.size() != ds.metadata.count) {
    throw SchemaError("metadata declares " + std::to_string(ds.metadata.count) +
                      " examples but the file holds " + std::to_string(ds.examples.size()));
  }
  const auto [lo, hi] = std::minmax_element(std::begin(label_counts), std::end(label_counts));
  if (*hi - *lo > 1) {
    throw SchemaError("label histogram is unbalanced: " + std::to_string(label_counts[0]) +
                      "/" + std::to_string(label_counts[1]) + "/" +
                      std::to_string(label_counts[2]));
  }
  return ds;
}

std::string dataset_filename(const Pairing& pairing) {
  return "nli_" + pairing.premise_language + "_" + pairing.hypothesis_language + ".jsonl";
}

std::vector<std::filesystem::path> write_suite(const Suite& suite,
                                               const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<fs::path> written;
  try {
    json manifest{{"suite_id", suite.suite_id}, {"pairings", json::array()}};
    if (!suite.datasets.empty()) {
      const DatasetMetadata& m = suite.datasets.front().metadata;
      manifest["seed"] = m.seed;
      manifest["count"] = m.count;
      manifest["template_hash"] = m.template_hash;
      manifest["lexicon_hash"] = m.lexicon_hash;
    }
    for (const Dataset& ds : suite.datasets) {
      const fs::path file = dir / dataset_filename(ds.metadata.pairing);
      write_jsonl(ds, file);
      written.push_back(file);
      manifest["pairings"].push_back(
          {{"premise_language", ds.metadata.pairing.premise_language},
           {"hypothesis_language", ds.metadata.pairing.hypothesis_language},
           {"file", dataset_filename(ds.metadata.pairing)}});
    }
    const fs::path manifest_path = dir / "suite.json";
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + manifest_path.string());
    out << manifest.dump(2) << "\n";
    written.push_back(manifest_path);
    return written;
  } catch (...) {
    for (const fs::path& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    throw;
  }
}

}  // namespace syllogic
