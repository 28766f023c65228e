// Generates the bundled fixture corpus: a small synthetic JSONL corpus with
// planted rate trends, a staggered treatment effect, and a drifting
// pole-association for "dude". Deterministic for a fixed seed, so the
// committed fixture can be regenerated bit-for-bit.
#include <array>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sociolex/rng.hpp"
#include "sociolex/timebucket.hpp"

namespace {

using sociolex::Rng;

const std::vector<std::string> kFiller = {
    "the",  "and",  "to",    "of",    "it",    "that",  "was",  "for",  "on",
    "with", "as",   "this",  "but",   "not",   "they",  "at",   "what", "all",
    "so",   "out",  "up",    "just",  "about", "time",  "like", "know", "take",
    "into", "year", "good",  "could", "them",  "see",   "than", "then", "now",
    "only", "come", "over",  "also",  "back",  "after", "use",  "two",  "how",
    "work", "well", "way",   "even",  "new",   "want",  "any",  "these", "give",
    "day",  "most", "us",    "went",  "said",  "look",  "make", "think", "still"};

const std::vector<std::string> kMaleTerms = {"male", "man", "boy", "brother",
                                             "he",   "him", "his", "son",
                                             "father", "uncle", "grandfather"};
const std::vector<std::string> kFemaleTerms = {"female", "woman", "girl", "sister",
                                               "she",    "her",   "hers", "daughter",
                                               "mother", "aunt",  "grandmother"};

struct Community {
  const char* name;
  double partner_rate_2013;  // P(partner | spousal mention), start of series
  double partner_rate_2016;  // end of series
  double income;
};

// Communities come from the shipped label map; the trends are synthetic.
const std::array<Community, 8> kCommunities = {{
    {"relationships", 0.10, 0.30, 31000.0},
    {"dating_advice", 0.12, 0.28, 29000.0},
    {"lgbt", 0.44, 0.42, 34000.0},
    {"actuallesbians", 0.47, 0.45, 33000.0},
    {"askwomen", 0.16, 0.30, 36000.0},
    {"daddit", 0.12, 0.24, 38000.0},
    {"atheism", 0.14, 0.22, 41000.0},
    {"christianity", 0.08, 0.16, 27000.0},
}};

struct TreatedState {
  const char* code;
  const char* passage;  // YYYY-MM, matches the shipped treatment table
  double income;
};

const std::array<TreatedState, 10> kStates = {{
    {"MD", "2013-01", 37000.0},
    {"CA", "2013-06", 35000.0},
    {"DE", "2013-07", 32000.0},
    {"MN", "2013-08", 34000.0},
    {"RI", "2013-08", 31000.0},
    {"NJ", "2013-10", 39000.0},
    {"HI", "2013-12", 33000.0},
    {"NM", "2013-12", 26000.0},
    {"OR", "2014-05", 30000.0},
    {"PA", "2014-05", 29000.0},
}};

std::string pick(Rng& rng, const std::vector<std::string>& words) {
  return words[rng.next_below(words.size())];
}

std::string filler(Rng& rng, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (!s.empty()) s.push_back(' ');
    s += pick(rng, kFiller);
  }
  return s;
}

// Timestamp in the middle of a month, jittered within a ten-day window.
std::int64_t month_ts(int year, int month, Rng& rng) {
  const sociolex::TimeBucket b{sociolex::Granularity::month,
                               (year - 1970) * 12 + (month - 1)};
  return b.start() + 86400 * 8 + static_cast<std::int64_t>(rng.next_below(86400 * 10));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate the sociolex fixture corpus"};
  std::string out = "fixture_corpus.jsonl";
  std::uint64_t seed = 20130601;
  app.add_option("--out", out, "output JSONL path");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  std::ofstream os(out, std::ios::binary);
  if (!os) {
    std::cerr << "cannot write " << out << "\n";
    return 1;
  }

  Rng rng(seed);
  std::uint64_t next_id = 1;
  auto write = [&](const nlohmann::ordered_json& j) {
    os << j.dump() << "\n";
  };

  // Reddit community messages, monthly 2013-2016. Spousal mentions trend
  // toward "partner" in the non-LGBT communities; Person mentions shed
  // gender over the same span; "dude" contexts drift toward the male pole.
  for (int year = 2013; year <= 2016; ++year) {
    const double frac = (year - 2013) / 3.0;
    for (int month = 1; month <= 12; ++month) {
      for (const auto& c : kCommunities) {
        const double partner_p =
            c.partner_rate_2013 + (c.partner_rate_2016 - c.partner_rate_2013) * frac;
        for (int i = 0; i < 24; ++i) {
          std::string text = filler(rng, 4 + static_cast<int>(rng.next_below(5)));
          const double roll = rng.next_double();
          if (roll < 0.55) {
            // spousal mention, first or third person
            const std::string poss = rng.next_double() < 0.6 ? "my" : "her";
            std::string term;
            if (rng.next_double() < partner_p) {
              term = rng.next_double() < 0.75 ? "partner" : "spouse";
            } else {
              term = rng.next_double() < 0.55 ? "wife" : "husband";
            }
            text += " " + poss + " " + term + " " + filler(rng, 3);
          } else if (roll < 0.85) {
            // indefinite person mention, degendering over time
            const double gendered_p = 0.62 - 0.18 * frac;
            const std::string det = rng.next_double() < 0.5 ? "some" : "a";
            std::string term;
            if (rng.next_double() < gendered_p) {
              term = det == "a" ? (rng.next_double() < 0.5 ? "dude" : "guy")
                                : (rng.next_double() < 0.5 ? "guys" : "girls");
            } else {
              term = det == "a" ? "person" : (rng.next_double() < 0.5 ? "folks" : "people");
            }
            text += " " + det + " " + term + " " + filler(rng, 3);
          } else {
            // pole-context sentence driving the "dude" drift
            const double male_ctx = 0.55 + 0.35 * frac;
            const auto& side =
                rng.next_double() < male_ctx ? kMaleTerms : kFemaleTerms;
            text += " dude " + side[rng.next_below(side.size())] + " " +
                    side[rng.next_below(side.size())] + " " + filler(rng, 2);
          }
          // anchor-stability material: pole words in steady company
          if (rng.next_double() < 0.35) {
            const auto& side = rng.next_double() < 0.5 ? kMaleTerms : kFemaleTerms;
            text += " " + side[rng.next_below(side.size())] + " " + filler(rng, 2);
          }
          nlohmann::ordered_json j;
          j["id"] = "r" + std::to_string(next_id++);
          j["platform"] = "reddit";
          j["ts"] = month_ts(year, month, rng);
          j["text"] = text;
          j["community"] = c.name;
          j["demographics"] = {{"per_capita_income", c.income}};
          write(j);
        }
      }
    }
  }

  // Twitter state panel, monthly 2012-01 .. 2015-06, one spousal mention per
  // message. After a state's passage month the gendered terms gain share.
  for (int year = 2012; year <= 2015; ++year) {
    const int last_month = year == 2015 ? 6 : 12;
    for (int month = 1; month <= last_month; ++month) {
      const std::int32_t m_idx = (year - 1970) * 12 + (month - 1);
      for (const auto& st : kStates) {
        const std::int32_t treat = sociolex::parse_year_month(st.passage);
        const bool post = m_idx > treat;
        for (int i = 0; i < 14; ++i) {
          const double wife_p = post ? 0.34 : 0.26;
          std::string term;
          const double roll = rng.next_double();
          if (roll < wife_p) term = "wife";
          else if (roll < wife_p + 0.22) term = "husband";
          else if (roll < wife_p + 0.22 + 0.28) term = "partner";
          else term = "spouse";
          std::string text = filler(rng, 3 + static_cast<int>(rng.next_below(4))) +
                             " my " + term + " " + filler(rng, 3);
          nlohmann::ordered_json j;
          j["id"] = "t" + std::to_string(next_id++);
          j["platform"] = "twitter";
          j["ts"] = month_ts(year, month, rng);
          j["text"] = text;
          j["state"] = st.code;
          j["demographics"] = {{"per_capita_income", st.income}};
          write(j);
        }
      }
    }
  }

  os.flush();
  std::cerr << "wrote " << out << " (" << (next_id - 1) << " messages)\n";
  return 0;
}
