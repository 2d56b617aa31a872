#pragma once

#include <string>

#include <json.hpp>

namespace testing {

// Two languages, two concepts per role, guard-free frames; the smallest
// document Lexicon::from_json accepts. Tests mutate copies to probe
// validation and capacity limits.
inline nlohmann::json mini_lexicon_doc() {
  using nlohmann::json;
  json doc{{"languages", {"en", "xx"}},
           {"concepts",
            {{{"id", "dogs"}, {"role", "specific"}},
             {{"id", "cats"}, {"role", "specific"}},
             {{"id", "animals"}, {"role", "generic"}},
             {{"id", "plants"}, {"role", "generic"}}}},
           {"lexemes", json::array()},
           {"frames", json::array()}};
  for (const char* concept_id : {"dogs", "cats", "animals", "plants"}) {
    doc["lexemes"].push_back(
        {{"concept", concept_id}, {"language", "en"}, {"surface", concept_id}});
    doc["lexemes"].push_back({{"concept", concept_id},
                              {"language", "xx"},
                              {"surface", std::string(concept_id) + "x"}});
  }
  for (const char* lang : {"en", "xx"}) {
    doc["frames"].push_back({{"language", lang},
                             {"quantifier", "all"},
                             {"pattern", "All {subject} are {predicate}."}});
    doc["frames"].push_back({{"language", lang},
                             {"quantifier", "some"},
                             {"pattern", "Some {subject} are {predicate}."}});
    doc["frames"].push_back({{"language", lang},
                             {"quantifier", "no"},
                             {"pattern", "No {subject} are {predicate}."}});
  }
  return doc;
}

}  // namespace testing
