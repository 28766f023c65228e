#pragma once

// Seeded synthetic corpora shared by the unit and acceptance suites.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sociolex/corpus.hpp"
#include "sociolex/embeddings.hpp"
#include "sociolex/eventstudy.hpp"
#include "sociolex/rng.hpp"
#include "sociolex/timebucket.hpp"
#include "sociolex/variables.hpp"

namespace synth {

using sociolex::Rng;

inline const std::vector<std::string>& filler_vocab() {
  static const std::vector<std::string> v = {
      "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
      "india", "julie", "kilo",  "lima",  "mike1", "nov",     "oscar", "papa",
      "quebec", "romeo", "sierra", "tango", "uni",  "victor",  "whisk", "xray"};
  return v;
}

// Random token stream mixing filler, variant surfaces, and precursors so
// matches occur at a healthy rate.
inline std::vector<std::string> random_stream(Rng& rng, const sociolex::VariableSpec& spec,
                                              std::size_t len) {
  std::vector<std::string> toks;
  toks.reserve(len);
  const auto& filler = filler_vocab();
  for (std::size_t i = 0; i < len; ++i) {
    const auto roll = rng.next_below(10);
    if (roll < 4) {
      toks.push_back(filler[rng.next_below(filler.size())]);
    } else if (roll < 7) {
      const auto& pre = spec.rule().precursors;
      toks.push_back(pre[rng.next_below(pre.size())]);
    } else {
      const auto& vs = spec.variants();
      toks.push_back(vs[rng.next_below(vs.size())].surface);
    }
  }
  return toks;
}

// One message whose text is a space join of the given tokens.
inline sociolex::Message message_of(std::string id, std::int64_t ts,
                                    const std::vector<std::string>& tokens) {
  sociolex::Message m;
  m.id = std::move(id);
  m.platform = sociolex::Platform::other;
  m.ts = ts;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) m.text.push_back(' ');
    m.text += tokens[i];
  }
  return m;
}

// Bernoulli(p) choice between two variants inside a possessive context;
// returns messages plus the exact planted count of `hit`.
struct BernoulliCorpus {
  std::vector<sociolex::Message> messages;
  std::uint64_t hits = 0;
};

inline BernoulliCorpus bernoulli_corpus(double p, std::size_t n, std::uint64_t seed,
                                        const std::string& hit = "partner",
                                        const std::string& miss = "wife") {
  Rng rng(seed);
  BernoulliCorpus out;
  out.messages.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_hit = rng.next_double() < p;
    if (is_hit) ++out.hits;
    out.messages.push_back(message_of(
        "m" + std::to_string(i), 1'400'000'000 + static_cast<std::int64_t>(i),
        {"my", is_hit ? hit : miss, "is", "here"}));
  }
  return out;
}

// Staggered state-month panel with a constant post-treatment level shift.
struct PanelFixture {
  std::vector<sociolex::PanelRow> rows;
  std::map<std::string, std::int32_t> treatment;  // state -> month index
  double effect;
};

inline PanelFixture staggered_panel(std::size_t n_states, double effect, double noise_sd,
                                    std::uint64_t seed) {
  Rng rng(seed);
  PanelFixture fx;
  fx.effect = effect;
  const std::int32_t base = (2013 - 1970) * 12;
  for (std::size_t s = 0; s < n_states; ++s) {
    // Synthetic two-letter codes in stable order: SA, SB, ...
    std::string code = "S";
    code.push_back(static_cast<char>('A' + s % 26));
    if (s >= 26) code += std::to_string(s / 26);
    const std::int32_t treat = base + static_cast<std::int32_t>(rng.next_below(18));
    fx.treatment[code] = treat;
    const double state_level = 0.20 + 0.002 * static_cast<double>(s);
    for (std::int32_t k = -12; k <= 12; ++k) {
      sociolex::PanelRow row;
      row.state = code;
      row.month = treat + k;
      row.rel_month = k;
      const double month_level = 0.0005 * static_cast<double>(row.month - base);
      row.y = state_level + month_level + (k >= 1 ? effect : 0.0) +
              noise_sd * rng.next_normal();
      row.n = 50;
      fx.rows.push_back(row);
    }
  }
  return fx;
}

// Corpus where `target` co-occurs with pole-A words in a q fraction of its
// sentences and pole-B words otherwise. Background sentences keep both pole
// vocabularies trained. Token count scales with n_sentences.
inline sociolex::Sentences cooccurrence_corpus(
    Rng& rng, std::size_t n_sentences, const std::string& target, double q,
    const std::vector<std::string>& pole_a, const std::vector<std::string>& pole_b) {
  const auto& filler = filler_vocab();
  sociolex::Sentences out;
  out.reserve(n_sentences);
  auto pick = [&](const std::vector<std::string>& v) {
    return v[rng.next_below(v.size())];
  };
  for (std::size_t i = 0; i < n_sentences; ++i) {
    std::vector<std::string> sent;
    const auto kind = rng.next_below(10);
    if (kind < 3) {
      // target sentence: surrounded by one pole's words
      const bool male_side = rng.next_double() < q;
      const auto& side = male_side ? pole_a : pole_b;
      sent = {pick(side), pick(side), target, pick(side), pick(filler)};
    } else if (kind < 6) {
      sent = {pick(filler), pick(pole_a), pick(pole_a), pick(filler), pick(pole_a)};
    } else if (kind < 9) {
      sent = {pick(filler), pick(pole_b), pick(pole_b), pick(filler), pick(pole_b)};
    } else {
      sent = {pick(filler), pick(filler), pick(filler), pick(filler), pick(filler)};
    }
    out.push_back(std::move(sent));
  }
  return out;
}

}  // namespace synth
