#include "sociolex/variables.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <future>
#include <sstream>

#include "json.hpp"
#include "sociolex/csv.hpp"
#include "sociolex/error.hpp"
#include "sociolex/tokenize.hpp"

namespace sociolex {

namespace {
using nlohmann::json;
}

GenderClass gender_from_string(const std::string& s) {
  if (s == "masculine") return GenderClass::masculine;
  if (s == "feminine") return GenderClass::feminine;
  if (s == "neutral") return GenderClass::neutral;
  throw ValidationError("unknown gender class '" + s + "'");
}

const char* to_string(GenderClass g) {
  switch (g) {
    case GenderClass::masculine: return "masculine";
    case GenderClass::feminine: return "feminine";
    default: return "neutral";
  }
}

Plurality plurality_from_string(const std::string& s) {
  if (s == "singular") return Plurality::singular;
  if (s == "plural") return Plurality::plural;
  if (s == "either") return Plurality::either;
  throw ValidationError("unknown plurality '" + s + "'");
}

const char* to_string(Plurality p) {
  switch (p) {
    case Plurality::singular: return "singular";
    case Plurality::plural: return "plural";
    default: return "either";
  }
}

RuleKind rule_kind_from_string(const std::string& s) {
  if (s == "possessive_precursor") return RuleKind::possessive_precursor;
  if (s == "determiner_precursor") return RuleKind::determiner_precursor;
  throw ValidationError("unknown context rule kind '" + s + "'");
}

const char* to_string(RuleKind k) {
  return k == RuleKind::possessive_precursor ? "possessive_precursor"
                                             : "determiner_precursor";
}

Perspective perspective_from_string(const std::string& s) {
  if (s == "first") return Perspective::first;
  if (s == "second") return Perspective::second;
  if (s == "third") return Perspective::third;
  if (s == "na") return Perspective::na;
  throw ValidationError("unknown perspective '" + s + "'");
}

const char* to_string(Perspective p) {
  switch (p) {
    case Perspective::first: return "first";
    case Perspective::second: return "second";
    case Perspective::third: return "third";
    default: return "na";
  }
}

bool ContextRule::has_precursor(const std::string& tok) const {
  return std::binary_search(precursors.begin(), precursors.end(), tok);
}

VariableSpec::VariableSpec(std::string name, std::vector<VariantSpec> variants,
                           ContextRule rule)
    : name_(std::move(name)), variants_(std::move(variants)), rule_(std::move(rule)) {
  if (name_.empty()) throw ValidationError("variable name is empty");
  if (variants_.empty()) throw ValidationError(name_ + ": variant list is empty");
  if (rule_.precursors.empty()) throw ValidationError(name_ + ": precursor set is empty");
  std::sort(rule_.precursors.begin(), rule_.precursors.end());
  rule_.precursors.erase(
      std::unique(rule_.precursors.begin(), rule_.precursors.end()),
      rule_.precursors.end());
  for (const auto& p : rule_.precursors) {
    if (p != normalize_token(p)) {
      throw ValidationError(name_ + ": precursor '" + p + "' is not a normalized token");
    }
  }
  for (std::uint32_t i = 0; i < variants_.size(); ++i) {
    const auto& v = variants_[i];
    if (v.surface != normalize_token(v.surface)) {
      throw ValidationError(name_ + ": variant '" + v.surface + "' is not a normalized token");
    }
    if (!index_.emplace(v.surface, i).second) {
      throw ValidationError(name_ + ": duplicate variant surface '" + v.surface + "'");
    }
  }
}

VariableSpec VariableSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open variable spec: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("variable spec " + path + ": " + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("name") || !j.contains("rule") || !j.contains("variants")) {
      throw ValidationError("expected object with name, rule, variants");
    }
    ContextRule rule;
    rule.kind = rule_kind_from_string(j["rule"].at("kind").get<std::string>());
    for (const auto& p : j["rule"].at("precursors")) {
      rule.precursors.push_back(p.get<std::string>());
    }
    std::vector<VariantSpec> variants;
    for (const auto& v : j["variants"]) {
      VariantSpec vs;
      vs.surface = v.at("surface").get<std::string>();
      if (!v.contains("gender")) {
        throw ValidationError("variant '" + vs.surface + "' has no gender class");
      }
      vs.gender = gender_from_string(v.at("gender").get<std::string>());
      vs.plurality = v.contains("plurality")
                         ? plurality_from_string(v.at("plurality").get<std::string>())
                         : Plurality::singular;
      variants.push_back(std::move(vs));
    }
    return VariableSpec(j["name"].get<std::string>(), std::move(variants), std::move(rule));
  } catch (const json::exception& e) {
    throw ValidationError("variable spec " + path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError("variable spec " + path + ": " + e.what());
  }
}

const VariantSpec* VariableSpec::find(const std::string& surface) const {
  auto it = index_.find(surface);
  return it == index_.end() ? nullptr : &variants_[it->second];
}

bool Occurrence::has_label(const std::string& tag) const {
  if (!labels) return false;
  return std::binary_search(labels->begin(), labels->end(), tag);
}

std::vector<Match> match_context(const std::vector<std::string>& tokens,
                                 const VariableSpec& spec) {
  std::vector<Match> out;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const VariantSpec* v = spec.find(tokens[i]);
    if (!v) continue;
    if (!spec.rule().has_precursor(tokens[i - 1])) continue;
    out.push_back(Match{static_cast<std::uint32_t>(i), tokens[i - 1],
                        static_cast<std::uint32_t>(v - spec.variants().data())});
  }
  return out;
}

Perspective classify_perspective(const std::string& precursor) {
  if (precursor == "my" || precursor == "our") return Perspective::first;
  if (precursor == "your") return Perspective::second;
  if (precursor == "his" || precursor == "her" || precursor == "its" ||
      precursor == "their") {
    return Perspective::third;
  }
  return Perspective::na;
}

namespace {

void extract_one(const Message& m, const std::vector<VariableSpec>& specs,
                 std::vector<Occurrence>& out) {
  const auto tokens = tokenize(m.text);
  if (tokens.size() < 2) return;
  const std::int32_t month = month_index(m.ts);
  for (const auto& spec : specs) {
    for (const auto& match : match_context(tokens, spec)) {
      const VariantSpec& v = spec.variants()[match.variant_index];
      Occurrence occ;
      occ.message_id = m.id;
      occ.variable = spec.name();
      occ.variant = v.surface;
      occ.gender = v.gender;
      occ.precursor = match.precursor;
      occ.perspective = spec.rule().kind == RuleKind::possessive_precursor
                            ? classify_perspective(match.precursor)
                            : Perspective::na;
      occ.month = month;
      occ.state = m.state;
      occ.labels = m.labels;
      occ.community = m.community;
      occ.demographics = m.demographics;
      out.push_back(std::move(occ));
    }
  }
}

}  // namespace

std::vector<Occurrence> extract_occurrences(const std::vector<Message>& messages,
                                            const std::vector<VariableSpec>& specs,
                                            int threads) {
  std::vector<Occurrence> out;
  if (threads <= 1 || messages.size() < 2048) {
    for (const auto& m : messages) extract_one(m, specs, out);
    return out;
  }
  // Fixed shards by index; results concatenate in shard order, so the
  // occurrence stream is identical to the sequential one.
  const std::size_t nshards = static_cast<std::size_t>(threads);
  const std::size_t per = (messages.size() + nshards - 1) / nshards;
  std::vector<std::future<std::vector<Occurrence>>> futs;
  for (std::size_t s = 0; s < nshards; ++s) {
    const std::size_t lo = s * per;
    const std::size_t hi = std::min(messages.size(), lo + per);
    if (lo >= hi) break;
    futs.push_back(std::async(std::launch::async, [&, lo, hi] {
      std::vector<Occurrence> part;
      for (std::size_t i = lo; i < hi; ++i) extract_one(messages[i], specs, part);
      return part;
    }));
  }
  for (auto& f : futs) {
    auto part = f.get();
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

void extract_occurrences(JsonlReader& reader, const std::vector<VariableSpec>& specs,
                         const std::function<void(Occurrence&&)>& sink, int threads) {
  constexpr std::size_t kBatch = 8192;
  std::vector<Message> batch;
  batch.reserve(kBatch);
  for (;;) {
    batch.clear();
    while (batch.size() < kBatch) {
      auto m = reader.next();
      if (!m) break;
      batch.push_back(std::move(*m));
    }
    if (batch.empty()) return;
    auto occs = extract_occurrences(batch, specs, threads);
    for (auto& o : occs) sink(std::move(o));
    if (batch.size() < kBatch) return;
  }
}

void write_occurrences_csv(const std::string& path, const std::vector<Occurrence>& occs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write occurrence CSV: " + path);
  out << "message_id,variable,variant,gender,precursor,perspective,month,state,labels\n";
  for (const auto& o : occs) {
    std::string labels;
    if (o.labels) {
      for (std::size_t i = 0; i < o.labels->size(); ++i) {
        if (i) labels.push_back(';');
        labels += (*o.labels)[i];
      }
    }
    csv::write_row(out, {o.message_id, o.variable, o.variant, to_string(o.gender),
                         o.precursor, to_string(o.perspective), month_label(o.month),
                         o.state.value_or(""), labels});
  }
  if (!out) throw AnalysisError("write failed: " + path);
}

std::vector<Occurrence> read_occurrences_csv(const std::string& path) {
  const auto rows = csv::read_rows(path);
  if (rows.empty()) throw ValidationError(path + ": empty occurrence CSV");
  const std::vector<std::string> expect = {"message_id", "variable", "variant",
                                           "gender",     "precursor", "perspective",
                                           "month",      "state",     "labels"};
  if (rows[0] != expect) throw ValidationError(path + ": unexpected occurrence CSV header");
  std::vector<Occurrence> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != expect.size()) {
      throw ValidationError(path + ": row " + std::to_string(r + 1) + " has " +
                            std::to_string(f.size()) + " fields");
    }
    Occurrence o;
    o.message_id = f[0];
    o.variable = f[1];
    o.variant = f[2];
    o.gender = gender_from_string(f[3]);
    o.precursor = f[4];
    o.perspective = perspective_from_string(f[5]);
    o.month = parse_year_month(f[6]);
    if (!f[7].empty()) o.state = f[7];
    if (!f[8].empty()) {
      auto labels = std::make_shared<Labels>();
      std::stringstream ss(f[8]);
      std::string item;
      while (std::getline(ss, item, ';')) labels->push_back(item);
      std::sort(labels->begin(), labels->end());
      o.labels = std::move(labels);
    }
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace sociolex
