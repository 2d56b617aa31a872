#pragma once

// Explicit-universe reference classifier. Enumerates concrete nonempty
// extensions over universes of 1..4 elements and quantifies over those
// models directly; shares no machinery with the library's region-mask
// classifier, so agreement between the two is meaningful evidence.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "syllogic/logic.hpp"

namespace oracle {

inline bool holds(const syllogic::Statement& s,
                  const std::map<std::string, std::set<int>>& extensions) {
  const std::set<int>& subj = extensions.at(s.subject);
  const std::set<int>& pred = extensions.at(s.predicate);
  switch (s.quantifier) {
    case syllogic::Quantifier::All:
      return std::all_of(subj.begin(), subj.end(),
                         [&](int x) { return pred.count(x) > 0; });
    case syllogic::Quantifier::Some:
      return std::any_of(subj.begin(), subj.end(),
                         [&](int x) { return pred.count(x) > 0; });
    case syllogic::Quantifier::No:
      return std::none_of(subj.begin(), subj.end(),
                          [&](int x) { return pred.count(x) > 0; });
  }
  return false;
}

// With at most three concepts, any countermodel needs at most four
// elements (one witness per existential plus one per otherwise-unwitnessed
// concept), so universes of 1..4 decide the classification exactly.
inline syllogic::Label classify(const syllogic::Statement& premise,
                                const syllogic::Statement& hypothesis,
                                int max_universe = 4) {
  std::vector<std::string> concepts;
  for (const std::string& c : {premise.subject, premise.predicate,
                               hypothesis.subject, hypothesis.predicate}) {
    if (std::find(concepts.begin(), concepts.end(), c) == concepts.end()) {
      concepts.push_back(c);
    }
  }

  bool hypothesis_always = true;
  bool hypothesis_never = true;
  for (int n = 1; n <= max_universe; ++n) {
    const int subsets = (1 << n) - 1;  // nonempty subsets of {0..n-1}
    std::vector<int> choice(concepts.size(), 1);
    for (;;) {
      std::map<std::string, std::set<int>> extensions;
      for (std::size_t i = 0; i < concepts.size(); ++i) {
        std::set<int>& ext = extensions[concepts[i]];
        for (int b = 0; b < n; ++b) {
          if (choice[i] & (1 << b)) ext.insert(b);
        }
      }
      if (holds(premise, extensions)) {
        const bool h = holds(hypothesis, extensions);
        hypothesis_always = hypothesis_always && h;
        hypothesis_never = hypothesis_never && !h;
      }
      std::size_t i = 0;
      while (i < concepts.size() && ++choice[i] > subsets) {
        choice[i] = 1;
        ++i;
      }
      if (i == concepts.size()) break;
    }
  }
  if (hypothesis_always) return syllogic::Label::Entailment;
  if (hypothesis_never) return syllogic::Label::Contradiction;
  return syllogic::Label::Neutral;
}

}  // namespace oracle
