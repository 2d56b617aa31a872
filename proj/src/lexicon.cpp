#include "syllogic/lexicon.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "syllogic/hash.hpp"
#include "syllogic/http_json.hpp"

namespace syllogic {
namespace {

using nlohmann::json;

bool valid_language_tag(const std::string& tag) {
  return tag.size() == 2 && tag[0] >= 'a' && tag[0] <= 'z' && tag[1] >= 'a' &&
         tag[1] <= 'z';
}

// Pattern decomposition around the two placeholders.
struct PatternParts {
  std::string prefix, mid, suffix;
  bool subject_first = true;
  bool ok = false;
};

PatternParts split_pattern(const std::string& pattern) {
  PatternParts parts;
  const std::string subj = "{subject}", pred = "{predicate}";
  auto s_pos = pattern.find(subj);
  auto p_pos = pattern.find(pred);
  if (s_pos == std::string::npos || p_pos == std::string::npos) return parts;
  if (pattern.find(subj, s_pos + 1) != std::string::npos) return parts;
  if (pattern.find(pred, p_pos + 1) != std::string::npos) return parts;
  parts.subject_first = s_pos < p_pos;
  auto first_pos = parts.subject_first ? s_pos : p_pos;
  auto first_len = parts.subject_first ? subj.size() : pred.size();
  auto second_pos = parts.subject_first ? p_pos : s_pos;
  auto second_len = parts.subject_first ? pred.size() : subj.size();
  parts.prefix = pattern.substr(0, first_pos);
  parts.mid = pattern.substr(first_pos + first_len, second_pos - first_pos - first_len);
  parts.suffix = pattern.substr(second_pos + second_len);
  parts.ok = !parts.mid.empty();
  return parts;
}

bool guard_matches(const Frame& frame, const Lexeme& subject) {
  for (const auto& [feature, value] : frame.guard) {
    auto it = subject.features.find(feature);
    if (it == subject.features.end() || it->second != value) return false;
  }
  return true;
}

std::map<std::string, std::string> string_map_from_json(const json& j) {
  std::map<std::string, std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    out[it.key()] = it.value().get<std::string>();
  }
  return out;
}

}  // namespace

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError("lexicon file " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

Lexicon Lexicon::from_json(const json& doc) {
  for (const char* field : {"languages", "concepts", "lexemes", "frames"}) {
    if (!doc.contains(field) || !doc.at(field).is_array()) {
      throw SchemaError(std::string("lexicon: missing or non-array field '") +
                        field + "'");
    }
  }

  Lexicon lex;
  std::vector<std::string> issues;

  for (const json& j : doc.at("languages")) {
    std::string tag = j.get<std::string>();
    if (!valid_language_tag(tag)) {
      issues.push_back("language tag \"" + tag + "\" is not a lowercase two-letter code");
      continue;
    }
    if (std::find(lex.languages_.begin(), lex.languages_.end(), tag) !=
        lex.languages_.end()) {
      issues.push_back("duplicate language \"" + tag + "\"");
      continue;
    }
    lex.languages_.push_back(tag);
  }
  if (lex.languages_.empty()) issues.push_back("no languages declared");

  std::set<ConceptId> concept_ids;
  int specific = 0, generic = 0;
  for (const json& j : doc.at("concepts")) {
    ConceptId id = j.at("id").get<std::string>();
    std::string role = j.at("role").get<std::string>();
    if (!concept_ids.insert(id).second) {
      issues.push_back("duplicate concept \"" + id + "\"");
      continue;
    }
    if (role == "specific") {
      lex.concepts_.emplace_back(id, ConceptRole::Specific);
      ++specific;
    } else if (role == "generic") {
      lex.concepts_.emplace_back(id, ConceptRole::Generic);
      ++generic;
    } else {
      issues.push_back("concept \"" + id + "\": unknown role \"" + role + "\"");
    }
  }
  if (specific < 2) issues.push_back("need at least 2 specific concepts, found " +
                                     std::to_string(specific));
  if (generic < 2) issues.push_back("need at least 2 generic concepts, found " +
                                    std::to_string(generic));

  for (const json& j : doc.at("lexemes")) {
    Lexeme lexeme{j.at("concept").get<std::string>(),
                  j.at("language").get<std::string>(),
                  j.at("surface").get<std::string>(),
                  j.contains("features") ? string_map_from_json(j.at("features"))
                                         : std::map<std::string, std::string>{}};
    if (!concept_ids.count(lexeme.concept_id)) {
      issues.push_back("lexeme for undeclared concept \"" + lexeme.concept_id + "\"");
      continue;
    }
    if (std::find(lex.languages_.begin(), lex.languages_.end(), lexeme.language) ==
        lex.languages_.end()) {
      issues.push_back("lexeme (" + lexeme.concept_id + ", " + lexeme.language +
                       ") uses an undeclared language");
      continue;
    }
    if (lexeme.surface.empty()) {
      issues.push_back("lexeme (" + lexeme.concept_id + ", " + lexeme.language +
                       ") has an empty surface");
      continue;
    }
    auto key = std::make_pair(lexeme.concept_id, lexeme.language);
    if (lex.lexemes_.count(key)) {
      issues.push_back("duplicate lexeme for (" + lexeme.concept_id + ", " +
                       lexeme.language + ")");
      continue;
    }
    auto surface_key = std::make_pair(lexeme.language, lexeme.surface);
    if (lex.by_surface_.count(surface_key)) {
      issues.push_back("surface \"" + lexeme.surface + "\" (" + lexeme.language +
                       ") is shared by concepts \"" + lex.by_surface_[surface_key] +
                       "\" and \"" + lexeme.concept_id + "\"");
      continue;
    }
    lex.by_surface_[surface_key] = lexeme.concept_id;
    lex.lexemes_.emplace(key, std::move(lexeme));
  }

  for (const auto& [concept_id, role] : lex.concepts_) {
    (void)role;
    for (const std::string& lang : lex.languages_) {
      if (!lex.lexemes_.count({concept_id, lang})) {
        issues.push_back("missing lexeme for (" + concept_id + ", " + lang + ")");
      }
    }
  }

  for (const json& j : doc.at("frames")) {
    Frame frame{j.at("language").get<std::string>(),
                quantifier_from_string(j.at("quantifier").get<std::string>()),
                j.at("pattern").get<std::string>(),
                j.contains("guard") ? string_map_from_json(j.at("guard"))
                                    : std::map<std::string, std::string>{}};
    if (std::find(lex.languages_.begin(), lex.languages_.end(), frame.language) ==
        lex.languages_.end()) {
      issues.push_back("frame for undeclared language \"" + frame.language + "\"");
      continue;
    }
    if (!split_pattern(frame.pattern).ok) {
      issues.push_back("frame (" + frame.language + ", " + to_string(frame.quantifier) +
                       ") pattern \"" + frame.pattern +
                       "\" must contain {subject} and {predicate} exactly once, separated");
      continue;
    }
    lex.frames_.push_back(std::move(frame));
  }

  for (const std::string& lang : lex.languages_) {
    for (Quantifier q : {Quantifier::All, Quantifier::Some, Quantifier::No}) {
      int fallbacks = 0, total = 0;
      for (const Frame& f : lex.frames_) {
        if (f.language != lang || f.quantifier != q) continue;
        ++total;
        if (f.is_fallback()) ++fallbacks;
      }
      if (total == 0 || fallbacks == 0) {
        issues.push_back("no guard-free fallback frame for (" + lang + ", " +
                         to_string(q) + ")");
      } else if (fallbacks > 1) {
        issues.push_back("multiple guard-free frames for (" + lang + ", " +
                         to_string(q) + ")");
      }
      // Guarded frames must never compete for the same lexeme.
      for (const auto& [key, lexeme] : lex.lexemes_) {
        if (key.second != lang) continue;
        int matching = 0;
        for (const Frame& f : lex.frames_) {
          if (f.language == lang && f.quantifier == q && !f.is_fallback() &&
              guard_matches(f, lexeme)) {
            ++matching;
          }
        }
        if (matching > 1) {
          issues.push_back("ambiguous guards: " + std::to_string(matching) +
                           " frames match lexeme \"" + lexeme.surface + "\" for (" +
                           lang + ", " + to_string(q) + ")");
        }
      }
    }
  }

  if (!issues.empty()) throw ValidationError(std::move(issues));

  // Canonical re-serialization keeps the hash independent of input formatting.
  json canonical{{"languages", lex.languages_},
                 {"concepts", json::array()},
                 {"lexemes", json::array()},
                 {"frames", json::array()}};
  for (const auto& [id, role] : lex.concepts_) {
    canonical["concepts"].push_back(
        {{"id", id}, {"role", role == ConceptRole::Specific ? "specific" : "generic"}});
  }
  for (const auto& [key, lexeme] : lex.lexemes_) {
    canonical["lexemes"].push_back({{"concept", lexeme.concept_id},
                                    {"language", lexeme.language},
                                    {"surface", lexeme.surface},
                                    {"features", lexeme.features}});
  }
  for (const Frame& f : lex.frames_) {
    canonical["frames"].push_back({{"language", f.language},
                                   {"quantifier", to_string(f.quantifier)},
                                   {"pattern", f.pattern},
                                   {"guard", f.guard}});
  }
  lex.hash_ = short_hash(canonical.dump());
  return lex;
}

bool Lexicon::has_language(const std::string& lang) const {
  return std::find(languages_.begin(), languages_.end(), lang) != languages_.end();
}

std::vector<ConceptId> Lexicon::concepts(ConceptRole role) const {
  std::vector<ConceptId> out;
  for (const auto& [id, r] : concepts_) {
    if (r == role) out.push_back(id);
  }
  return out;
}

bool Lexicon::has_concept(const ConceptId& c) const {
  return std::any_of(concepts_.begin(), concepts_.end(),
                     [&](const auto& pair) { return pair.first == c; });
}

const Lexeme& Lexicon::lexeme(const ConceptId& concept_id,
                              const std::string& language) const {
  auto it = lexemes_.find({concept_id, language});
  if (it == lexemes_.end()) {
    throw ContractError("no lexeme for (" + concept_id + ", " + language + ")");
  }
  return it->second;
}

const Frame& Lexicon::frame_for(const std::string& language, Quantifier q,
                                const Lexeme& subject) const {
  const Frame* fallback = nullptr;
  for (const Frame& f : frames_) {
    if (f.language != language || f.quantifier != q) continue;
    if (f.is_fallback()) {
      fallback = &f;
    } else if (guard_matches(f, subject)) {
      return f;
    }
  }
  if (!fallback) {
    throw ContractError("no frame for (" + language + ", " + to_string(q) + ")");
  }
  return *fallback;
}

std::optional<ConceptId> Lexicon::concept_by_surface(const std::string& language,
                                                     std::string_view surface) const {
  auto it = by_surface_.find({language, std::string(surface)});
  if (it == by_surface_.end()) return std::nullopt;
  return it->second;
}

std::string realize(const Statement& statement, const std::string& language,
                    const Lexicon& lexicon) {
  if (!lexicon.has_language(language)) {
    throw ContractError("language \"" + language + "\" is not in the lexicon");
  }
  const Lexeme& subject = lexicon.lexeme(statement.subject, language);
  const Lexeme& predicate = lexicon.lexeme(statement.predicate, language);
  const Frame& frame = lexicon.frame_for(language, statement.quantifier, subject);
  std::string out = frame.pattern;
  auto substitute = [&out](const std::string& placeholder, const std::string& value) {
    out.replace(out.find(placeholder), placeholder.size(), value);
  };
  substitute("{subject}", subject.surface);
  substitute("{predicate}", predicate.surface);
  return out;
}

std::optional<Statement> parse_statement(std::string_view text,
                                         const std::string& language,
                                         const Lexicon& lexicon) {
  std::vector<Statement> found;
  auto consider = [&](const Statement& st) {
    if (std::find(found.begin(), found.end(), st) == found.end()) found.push_back(st);
  };
  for (const Frame& frame : lexicon.frames()) {
    if (frame.language != language) continue;
    const PatternParts parts = split_pattern(frame.pattern);
    if (text.size() < parts.prefix.size() + parts.suffix.size()) continue;
    if (text.substr(0, parts.prefix.size()) != parts.prefix) continue;
    if (text.substr(text.size() - parts.suffix.size()) != parts.suffix) continue;
    std::string_view core =
        text.substr(parts.prefix.size(),
                    text.size() - parts.prefix.size() - parts.suffix.size());
    // Every split on `mid` is a candidate; lexeme lookup prunes the wrong ones.
    for (std::size_t pos = core.find(parts.mid); pos != std::string_view::npos;
         pos = core.find(parts.mid, pos + 1)) {
      std::string_view first = core.substr(0, pos);
      std::string_view second = core.substr(pos + parts.mid.size());
      if (first.empty() || second.empty()) continue;
      std::string_view subj = parts.subject_first ? first : second;
      std::string_view pred = parts.subject_first ? second : first;
      auto subj_concept = lexicon.concept_by_surface(language, subj);
      auto pred_concept = lexicon.concept_by_surface(language, pred);
      if (!subj_concept || !pred_concept || *subj_concept == *pred_concept) continue;
      consider(Statement(frame.quantifier, *subj_concept, *pred_concept));
    }
  }
  if (found.size() != 1) return std::nullopt;
  return found.front();
}

std::optional<Statement> parse_statement_any(std::string_view text,
                                             const Lexicon& lexicon) {
  std::vector<Statement> found;
  for (const std::string& lang : lexicon.languages()) {
    if (auto st = parse_statement(text, lang, lexicon)) {
      if (std::find(found.begin(), found.end(), *st) == found.end()) {
        found.push_back(*st);
      }
    }
  }
  if (found.size() != 1) return std::nullopt;
  return found.front();
}

MtClient::MtClient(MtEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.url.empty()) throw ConfigError("MT endpoint URL is not configured");
  if (!endpoint_.api_key_env.empty()) {
    const char* key = std::getenv(endpoint_.api_key_env.c_str());
    if (!key || !*key) {
      throw ConfigError("environment variable " + endpoint_.api_key_env +
                        " (MT API key) is not set");
    }
    api_key_ = key;
  }
}

std::string MtClient::translate(const std::string& text, const std::string& source,
                                const std::string& target) {
  if (source == target) {
    throw ContractError("MT source and target languages must differ, got \"" +
                        source + "\"");
  }
  const std::string key =
      short_hash("mt|" + endpoint_.url + "|" + source + "|" + target + "|" + text);
  std::map<std::string, std::string> headers;
  if (!api_key_.empty()) headers[endpoint_.auth_header] = "Bearer " + api_key_;
  nlohmann::json response = post_json(
      endpoint_.url, "", {{"text", text}, {"source", source}, {"target", target}},
      headers, endpoint_.retries, endpoint_.backoff_base_ms, key);
  if (!response.contains("translation") || !response.at("translation").is_string()) {
    throw GatewayError("MT response lacks a \"translation\" string", key);
  }
  std::string translation = response.at("translation").get<std::string>();
  if (translation.empty()) throw GatewayError("MT endpoint returned an empty translation", key);
  pairs_.emplace_back(text, translation);
  return translation;
}

}  // namespace syllogic
