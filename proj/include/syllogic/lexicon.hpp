#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "syllogic/logic.hpp"

namespace syllogic {

enum class ConceptRole { Specific, Generic };

// One fully inflected plural noun phrase for (concept, language). Features
// drive frame guards (e.g. gender in French, agreement class in Swahili).
struct Lexeme {
  ConceptId concept_id;
  std::string language;
  std::string surface;
  std::map<std::string, std::string> features;
};

// Per-language sentence pattern for one quantifier. The pattern contains
// "{subject}" and "{predicate}" exactly once each. A frame with an empty
// guard is the fallback; a guarded frame applies when every (feature, value)
// pair matches the subject lexeme.
struct Frame {
  std::string language;
  Quantifier quantifier;
  std::string pattern;
  std::map<std::string, std::string> guard;

  bool is_fallback() const { return guard.empty(); }
};

// Immutable after load; all invariants checked up front, every violation
// reported at once.
class Lexicon {
 public:
  static Lexicon load(const std::filesystem::path& path);
  static Lexicon from_json(const nlohmann::json& doc);

  const std::vector<std::string>& languages() const { return languages_; }
  bool has_language(const std::string& lang) const;
  std::vector<ConceptId> concepts(ConceptRole role) const;  // declaration order
  bool has_concept(const ConceptId& c) const;

  const Lexeme& lexeme(const ConceptId& concept_id, const std::string& language) const;
  // Guard-matching frame for (language, quantifier, subject); falls back to
  // the guard-free frame when no guard matches.
  const Frame& frame_for(const std::string& language, Quantifier q,
                         const Lexeme& subject) const;
  const std::vector<Frame>& frames() const { return frames_; }

  std::optional<ConceptId> concept_by_surface(const std::string& language,
                                              std::string_view surface) const;

  // Content hash of the canonical serialization; whitespace-insensitive.
  const std::string& hash() const { return hash_; }

 private:
  Lexicon() = default;

  std::vector<std::string> languages_;
  std::vector<std::pair<ConceptId, ConceptRole>> concepts_;
  std::map<std::pair<ConceptId, std::string>, Lexeme> lexemes_;
  std::vector<Frame> frames_;
  std::map<std::pair<std::string, std::string>, ConceptId> by_surface_;
  std::string hash_;
};

// Renders the statement in `language` using the lexicon's frames.
// Deterministic; output contains no residual placeholders.
std::string realize(const Statement& statement, const std::string& language,
                    const Lexicon& lexicon);

// Inverse of realize over one language's frames: recovers the statement from
// a realized sentence, or nullopt if no frame/lexeme combination matches
// unambiguously.
std::optional<Statement> parse_statement(std::string_view text,
                                         const std::string& language,
                                         const Lexicon& lexicon);

// Tries every declared language; returns the unique statement the text
// parses to, or nullopt if none or conflicting parses.
std::optional<Statement> parse_statement_any(std::string_view text,
                                             const Lexicon& lexicon);

// External machine-translation endpoint: HTTP POST {text, source, target}
// returning {translation}.
struct MtEndpoint {
  std::string url;
  std::string api_key_env;                     // empty = unauthenticated
  std::string auth_header = "Authorization";   // header carrying the key
  int retries = 3;
  int backoff_base_ms = 100;
};

class MtClient {
 public:
  explicit MtClient(MtEndpoint endpoint);

  // Returns the endpoint's translation verbatim and records the pair for
  // later quality scoring. ContractError if source == target.
  std::string translate(const std::string& text, const std::string& source,
                        const std::string& target);

  const std::vector<std::pair<std::string, std::string>>& recorded_pairs() const {
    return pairs_;
  }

 private:
  MtEndpoint endpoint_;
  std::string api_key_;
  std::vector<std::pair<std::string, std::string>> pairs_;
};

}  // namespace syllogic
