#include "syllogic/logic.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "syllogic/hash.hpp"

namespace syllogic {
namespace {

using nlohmann::json;

// Evaluates a statement over raw region masks. `subject`/`predicate` are
// concept bit positions, `occupied` has bit r set iff region r is nonempty.
bool eval_mask(Quantifier q, int subject, int predicate, std::uint32_t occupied,
               int region_count) {
  const std::uint32_t s_bit = 1u << subject;
  const std::uint32_t p_bit = 1u << predicate;
  switch (q) {
    case Quantifier::All:
      for (int r = 0; r < region_count; ++r) {
        if ((occupied >> r & 1u) && (r & s_bit) && !(r & p_bit)) return false;
      }
      return true;
    case Quantifier::Some:
      for (int r = 0; r < region_count; ++r) {
        if ((occupied >> r & 1u) && (r & s_bit) && (r & p_bit)) return true;
      }
      return false;
    case Quantifier::No:
      for (int r = 0; r < region_count; ++r) {
        if ((occupied >> r & 1u) && (r & s_bit) && (r & p_bit)) return false;
      }
      return true;
  }
  return false;  // unreachable
}

bool satisfies_import(std::uint32_t occupied, int k, int region_count) {
  for (int c = 0; c < k; ++c) {
    bool nonempty = false;
    for (int r = 0; r < region_count; ++r) {
      if ((occupied >> r & 1u) && (r & (1u << c))) {
        nonempty = true;
        break;
      }
    }
    if (!nonempty) return false;
  }
  return true;
}

json pattern_to_json(const TemplatePattern& p) {
  return json{{"quantifier", to_string(p.quantifier)},
              {"subject_slot", to_string(p.subject_slot)},
              {"predicate_slot", to_string(p.predicate_slot)}};
}

TemplatePattern pattern_from_json(const json& j, const std::string& where) {
  for (const char* field : {"quantifier", "subject_slot", "predicate_slot"}) {
    if (!j.contains(field) || !j.at(field).is_string()) {
      throw SchemaError(where + ": missing or non-string field '" + field + "'");
    }
  }
  return TemplatePattern(quantifier_from_string(j.at("quantifier").get<std::string>()),
                         slot_from_string(j.at("subject_slot").get<std::string>()),
                         slot_from_string(j.at("predicate_slot").get<std::string>()));
}

}  // namespace

std::string to_string(Quantifier q) {
  switch (q) {
    case Quantifier::All: return "all";
    case Quantifier::Some: return "some";
    case Quantifier::No: return "no";
  }
  return "?";
}

std::string to_string(Label l) {
  switch (l) {
    case Label::Entailment: return "entailment";
    case Label::Contradiction: return "contradiction";
    case Label::Neutral: return "neutral";
  }
  return "?";
}

std::string to_string(SlotVar s) {
  switch (s) {
    case SlotVar::A: return "A";
    case SlotVar::B: return "B";
    case SlotVar::C: return "C";
  }
  return "?";
}

Quantifier quantifier_from_string(std::string_view s) {
  if (s == "all") return Quantifier::All;
  if (s == "some") return Quantifier::Some;
  if (s == "no") return Quantifier::No;
  throw SchemaError("unknown quantifier \"" + std::string(s) + "\"");
}

Label label_from_string(std::string_view s) {
  if (s == "entailment") return Label::Entailment;
  if (s == "contradiction") return Label::Contradiction;
  if (s == "neutral") return Label::Neutral;
  throw SchemaError("unknown label \"" + std::string(s) + "\"");
}

SlotVar slot_from_string(std::string_view s) {
  if (s == "A") return SlotVar::A;
  if (s == "B") return SlotVar::B;
  if (s == "C") return SlotVar::C;
  throw SchemaError("unknown slot \"" + std::string(s) + "\"");
}

Statement::Statement(Quantifier q, ConceptId subj, ConceptId pred)
    : quantifier(q), subject(std::move(subj)), predicate(std::move(pred)) {
  if (subject == predicate) {
    throw ContractError("statement subject and predicate must differ, got \"" +
                        subject + "\" twice");
  }
}

Occupancy::Occupancy(std::vector<ConceptId> concepts,
                     const std::vector<unsigned>& occupied)
    : concepts_(std::move(concepts)) {
  if (concepts_.empty() || concepts_.size() > 3) {
    throw ContractError("occupancy supports 1..3 concepts, got " +
                        std::to_string(concepts_.size()));
  }
  if (std::set<ConceptId>(concepts_.begin(), concepts_.end()).size() != concepts_.size()) {
    throw ContractError("occupancy concepts must be distinct");
  }
  const unsigned region_count = 1u << concepts_.size();
  for (unsigned r : occupied) {
    if (r >= region_count) {
      throw ContractError("region " + std::to_string(r) + " out of range for " +
                          std::to_string(concepts_.size()) + " concepts");
    }
    regions_ |= 1u << r;
  }
  if (!satisfies_import(regions_, static_cast<int>(concepts_.size()),
                        static_cast<int>(region_count))) {
    throw ContractError("occupancy violates existential import: some concept is empty");
  }
}

int Occupancy::concept_index(const ConceptId& c) const {
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    if (concepts_[i] == c) return static_cast<int>(i);
  }
  return -1;
}

bool semantics(const Statement& statement, const Occupancy& occupancy) {
  const int s = occupancy.concept_index(statement.subject);
  const int p = occupancy.concept_index(statement.predicate);
  if (s < 0 || p < 0) {
    throw ContractError("statement uses a concept unknown to the occupancy: \"" +
                        (s < 0 ? statement.subject : statement.predicate) + "\"");
  }
  const int region_count = 1 << occupancy.concepts().size();
  return eval_mask(statement.quantifier, s, p, occupancy.region_mask(), region_count);
}

Label classify_pair(const Statement& premise, const Statement& hypothesis) {
  // Distinct concepts in first-appearance order.
  std::vector<ConceptId> concepts;
  for (const ConceptId* c : {&premise.subject, &premise.predicate,
                             &hypothesis.subject, &hypothesis.predicate}) {
    if (std::find(concepts.begin(), concepts.end(), *c) == concepts.end()) {
      concepts.push_back(*c);
    }
  }
  if (concepts.size() > 3) {
    throw ContractError("classify_pair supports at most 3 distinct concepts, got " +
                        std::to_string(concepts.size()));
  }
  const int k = static_cast<int>(concepts.size());
  const int region_count = 1 << k;
  auto index_of = [&](const ConceptId& c) {
    return static_cast<int>(std::find(concepts.begin(), concepts.end(), c) -
                            concepts.begin());
  };
  const int ps = index_of(premise.subject), pp = index_of(premise.predicate);
  const int hs = index_of(hypothesis.subject), hp = index_of(hypothesis.predicate);

  bool premise_satisfiable = false;
  bool hypothesis_everywhere = true;
  bool hypothesis_nowhere = true;
  const std::uint32_t mask_count = 1u << region_count;  // <= 256 for k = 3
  for (std::uint32_t occupied = 1; occupied < mask_count; ++occupied) {
    if (!satisfies_import(occupied, k, region_count)) continue;
    if (!eval_mask(premise.quantifier, ps, pp, occupied, region_count)) continue;
    premise_satisfiable = true;
    if (eval_mask(hypothesis.quantifier, hs, hp, occupied, region_count)) {
      hypothesis_nowhere = false;
    } else {
      hypothesis_everywhere = false;
    }
    if (!hypothesis_everywhere && !hypothesis_nowhere) return Label::Neutral;
  }
  // Cannot happen for All/Some/No under existential import; guarded anyway.
  if (!premise_satisfiable) {
    throw ContractError("premise is unsatisfiable under existential import");
  }
  return hypothesis_everywhere ? Label::Entailment : Label::Contradiction;
}

TemplatePattern::TemplatePattern(Quantifier q, SlotVar subj, SlotVar pred)
    : quantifier(q), subject_slot(subj), predicate_slot(pred) {
  if (subject_slot == predicate_slot) {
    throw ContractError("template pattern slots must differ, got " +
                        to_string(subject_slot) + " twice");
  }
}

AbstractExample instantiate(const Template& tpl, const Binding& binding) {
  std::set<SlotVar> slots{tpl.premise.subject_slot, tpl.premise.predicate_slot,
                          tpl.hypothesis.subject_slot, tpl.hypothesis.predicate_slot};
  std::set<ConceptId> seen;
  for (SlotVar slot : slots) {
    auto it = binding.find(slot);
    if (it == binding.end()) {
      throw ContractError("binding misses slot " + to_string(slot) +
                          " required by template \"" + tpl.id + "\"");
    }
    if (!seen.insert(it->second).second) {
      throw ContractError("binding repeats concept \"" + it->second +
                          "\" across slots of template \"" + tpl.id + "\"");
    }
  }
  auto bound = [&](const TemplatePattern& p) {
    return Statement(p.quantifier, binding.at(p.subject_slot),
                     binding.at(p.predicate_slot));
  };
  Statement premise = bound(tpl.premise);
  Statement hypothesis = bound(tpl.hypothesis);
  const Label label = classify_pair(premise, hypothesis);
  if (label != tpl.declared_label) {
    throw ValidationError("template \"" + tpl.id + "\" declares " +
                          to_string(tpl.declared_label) + " but classifies as " +
                          to_string(label));
  }
  std::string key = tpl.id;
  for (const auto& [slot, concept_id] : binding) {
    if (!slots.count(slot)) continue;  // an unused slot must not change the id
    key += "|" + to_string(slot) + ":" + concept_id;
  }
  return AbstractExample{short_hash(key), std::move(premise), std::move(hypothesis),
                         label, tpl.id};
}

std::vector<Template> builtin_templates() {
  std::vector<Template> out{
      {"all-some-entailment",
       TemplatePattern(Quantifier::All, SlotVar::A, SlotVar::B),
       TemplatePattern(Quantifier::Some, SlotVar::A, SlotVar::B),
       Label::Entailment},
      {"all-no-contradiction",
       TemplatePattern(Quantifier::All, SlotVar::A, SlotVar::B),
       TemplatePattern(Quantifier::No, SlotVar::A, SlotVar::B),
       Label::Contradiction},
      {"some-some-neutral",
       TemplatePattern(Quantifier::Some, SlotVar::A, SlotVar::B),
       TemplatePattern(Quantifier::Some, SlotVar::A, SlotVar::C),
       Label::Neutral},
  };
  for (const Template& t : out) validate_template(t);
  return out;
}

void validate_template(const Template& tpl) {
  // Slots map injectively to concepts, so classification over any distinct
  // instantiation equals classification over the slot names themselves.
  Binding fresh{{SlotVar::A, "slot:A"}, {SlotVar::B, "slot:B"}, {SlotVar::C, "slot:C"}};
  auto bound = [&](const TemplatePattern& p) {
    return Statement(p.quantifier, fresh.at(p.subject_slot), fresh.at(p.predicate_slot));
  };
  const Label classified = classify_pair(bound(tpl.premise), bound(tpl.hypothesis));
  if (classified != tpl.declared_label) {
    throw ValidationError("template \"" + tpl.id + "\": declared " +
                          to_string(tpl.declared_label) + ", classified " +
                          to_string(classified));
  }
}

std::vector<Template> load_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open template file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError("template file " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw SchemaError("template file " + path.string() + ": expected a JSON array");
  }
  std::vector<Template> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& j = doc[i];
    const std::string where = "template #" + std::to_string(i);
    if (!j.contains("id") || !j.at("id").is_string()) {
      throw SchemaError(where + ": missing or non-string field 'id'");
    }
    if (!j.contains("label") || !j.at("label").is_string()) {
      throw SchemaError(where + ": missing or non-string field 'label'");
    }
    if (!j.contains("premise") || !j.contains("hypothesis")) {
      throw SchemaError(where + ": missing 'premise' or 'hypothesis'");
    }
    Template t{j.at("id").get<std::string>(),
               pattern_from_json(j.at("premise"), where),
               pattern_from_json(j.at("hypothesis"), where),
               label_from_string(j.at("label").get<std::string>())};
    if (!ids.insert(t.id).second) {
      throw SchemaError(where + ": duplicate template id \"" + t.id + "\"");
    }
    validate_template(t);
    out.push_back(std::move(t));
  }
  if (out.empty()) throw SchemaError("template file " + path.string() + " is empty");
  return out;
}

std::vector<Template> select_templates(const std::vector<Template>& all,
                                       const std::vector<std::string>& ids) {
  if (ids.empty()) return all;
  std::vector<Template> out;
  for (const std::string& id : ids) {
    auto it = std::find_if(all.begin(), all.end(),
                           [&](const Template& t) { return t.id == id; });
    if (it == all.end()) throw ConfigError("unknown template id \"" + id + "\"");
    out.push_back(*it);
  }
  return out;
}

std::string templates_hash(const std::vector<Template>& templates) {
  json arr = json::array();
  for (const Template& t : templates) {
    arr.push_back(json{{"id", t.id},
                       {"premise", pattern_to_json(t.premise)},
                       {"hypothesis", pattern_to_json(t.hypothesis)},
                       {"label", to_string(t.declared_label)}});
  }
  std::sort(arr.begin(), arr.end(), [](const json& a, const json& b) {
    return a.at("id").get<std::string>() < b.at("id").get<std::string>();
  });
  return short_hash(arr.dump());
}

}  // namespace syllogic
