#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "syllogic/errors.hpp"

namespace syllogic {

enum class Quantifier { All, Some, No };
enum class Label { Entailment, Contradiction, Neutral };
enum class SlotVar { A, B, C };

std::string to_string(Quantifier q);
std::string to_string(Label l);
std::string to_string(SlotVar s);
Quantifier quantifier_from_string(std::string_view s);
Label label_from_string(std::string_view s);
SlotVar slot_from_string(std::string_view s);

using ConceptId = std::string;

// A quantified categorical assertion over two distinct concepts.
struct Statement {
  Statement(Quantifier q, ConceptId subj, ConceptId pred);

  Quantifier quantifier;
  ConceptId subject;
  ConceptId predicate;

  bool operator==(const Statement&) const = default;
};

// A finite model over k <= 3 concepts, represented by which Venn regions are
// nonempty. Region r (0 <= r < 2^k) is inside concepts[i] iff bit i of r is
// set. Truth of All/Some/No depends only on region nonemptiness, so this is
// a complete semantic domain for the fragment.
class Occupancy {
 public:
  // `occupied` lists the nonempty regions. Every concept must be nonempty
  // (existential import), otherwise ContractError.
  Occupancy(std::vector<ConceptId> concepts, const std::vector<unsigned>& occupied);

  const std::vector<ConceptId>& concepts() const { return concepts_; }
  std::uint32_t region_mask() const { return regions_; }
  int concept_index(const ConceptId& c) const;  // -1 if absent

 private:
  std::vector<ConceptId> concepts_;
  std::uint32_t regions_ = 0;  // bit r set <=> region r occupied
};

// Truth of `statement` in the model `occupancy`.
// ContractError if a concept of the statement is not in the model.
bool semantics(const Statement& statement, const Occupancy& occupancy);

// Exhaustive model checking over all occupancy patterns satisfying
// existential import. Entailment: the hypothesis holds wherever the premise
// does; Contradiction: it fails wherever the premise holds; Neutral
// otherwise. ContractError if the pair spans more than 3 distinct concepts.
Label classify_pair(const Statement& premise, const Statement& hypothesis);

// Slot-level statement pattern; slots instead of concepts.
struct TemplatePattern {
  TemplatePattern(Quantifier q, SlotVar subj, SlotVar pred);

  Quantifier quantifier;
  SlotVar subject_slot;
  SlotVar predicate_slot;

  bool operator==(const TemplatePattern&) const = default;
};

struct Template {
  std::string id;
  TemplatePattern premise;
  TemplatePattern hypothesis;
  Label declared_label;

  bool operator==(const Template&) const = default;
};

// Injective assignment of concepts to the slots a template uses.
using Binding = std::map<SlotVar, ConceptId>;

// A verified instantiation: the stored label is classify_pair of the bound
// statements, never the template's unchecked claim.
struct AbstractExample {
  std::string id;  // short content hash of (template_id, binding)
  Statement premise;
  Statement hypothesis;
  Label label;
  std::string template_id;
};

// Binds the template's slots and classifies the result. ContractError on a
// partial or non-injective binding; ValidationError if the classified label
// disagrees with template.declared_label.
AbstractExample instantiate(const Template& tpl, const Binding& binding);

// The three bundled templates, one per label:
//   All A are B  =>  Some A are B   (entailment)
//   All A are B  =>  No A are B     (contradiction)
//   Some A are B =>  Some A are C   (neutral)
std::vector<Template> builtin_templates();

// Classifies the template over fresh distinct concepts and compares with the
// declared label; throws ValidationError naming both labels on mismatch.
void validate_template(const Template& tpl);

// JSON template file: array of {id, premise, hypothesis, label} with
// patterns {quantifier, subject_slot, predicate_slot}. Every template is
// passed through validate_template.
std::vector<Template> load_templates(const std::filesystem::path& path);
std::vector<Template> select_templates(const std::vector<Template>& all,
                                       const std::vector<std::string>& ids);

// Stable content hash of a template set (order-insensitive).
std::string templates_hash(const std::vector<Template>& templates);

}  // namespace syllogic
