#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sociolex/corpus.hpp"

namespace sociolex {

enum class GenderClass { masculine, feminine, neutral };
enum class Plurality { singular, plural, either };
enum class RuleKind { possessive_precursor, determiner_precursor };
enum class Perspective { first, second, third, na };

GenderClass gender_from_string(const std::string& s);
const char* to_string(GenderClass g);
Plurality plurality_from_string(const std::string& s);
const char* to_string(Plurality p);
RuleKind rule_kind_from_string(const std::string& s);
const char* to_string(RuleKind k);
Perspective perspective_from_string(const std::string& s);
const char* to_string(Perspective p);

struct VariantSpec {
  std::string surface;  // single tokenizer-normalized token
  GenderClass gender = GenderClass::neutral;
  Plurality plurality = Plurality::singular;
};

struct ContextRule {
  RuleKind kind = RuleKind::possessive_precursor;
  std::vector<std::string> precursors;  // sorted, lowercase single tokens
  bool has_precursor(const std::string& tok) const;
};

class VariableSpec {
 public:
  VariableSpec(std::string name, std::vector<VariantSpec> variants, ContextRule rule);

  static VariableSpec load(const std::string& path);

  const std::string& name() const { return name_; }
  const std::vector<VariantSpec>& variants() const { return variants_; }
  const ContextRule& rule() const { return rule_; }
  // nullptr when the token is not a variant surface.
  const VariantSpec* find(const std::string& surface) const;

 private:
  std::string name_;
  std::vector<VariantSpec> variants_;
  ContextRule rule_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// One context-licensed use of a variable in one message.
struct Occurrence {
  std::string message_id;
  std::string variable;
  std::string variant;
  GenderClass gender = GenderClass::neutral;
  std::string precursor;
  Perspective perspective = Perspective::na;
  std::int32_t month = 0;  // months since 1970-01
  std::optional<std::string> state;
  std::shared_ptr<const Labels> labels;
  // In-memory extras used by grouped analyses; not part of the CSV schema.
  std::optional<std::string> community;
  std::shared_ptr<const Demographics> demographics;

  bool has_label(const std::string& tag) const;
};

struct Match {
  std::uint32_t position;       // token index of the variant
  std::string precursor;        // tokens[position - 1]
  std::uint32_t variant_index;  // into spec.variants()
};

// Reports a match at position i iff tokens[i] is a variant surface and
// tokens[i-1] is one of the rule's precursors. All matches are reported in
// position order.
std::vector<Match> match_context(const std::vector<std::string>& tokens,
                                 const VariableSpec& spec);

// my,our -> first; your -> second; his,her,its,their -> third; else na.
Perspective classify_perspective(const std::string& precursor);

// One Occurrence per match per message, in (message, spec, position) order.
// With threads > 1 messages are processed in parallel batches whose results
// merge in input order, so the output is identical to the sequential run.
std::vector<Occurrence> extract_occurrences(const std::vector<Message>& messages,
                                            const std::vector<VariableSpec>& specs,
                                            int threads = 1);
void extract_occurrences(JsonlReader& reader, const std::vector<VariableSpec>& specs,
                         const std::function<void(Occurrence&&)>& sink, int threads = 1);

// Columnar CSV with the fixed header
// message_id,variable,variant,gender,precursor,perspective,month,state,labels
void write_occurrences_csv(const std::string& path, const std::vector<Occurrence>& occs);
std::vector<Occurrence> read_occurrences_csv(const std::string& path);

}  // namespace sociolex
