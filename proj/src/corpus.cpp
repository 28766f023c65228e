#include "sociolex/corpus.hpp"

#include <algorithm>
#include <array>
#include <cstring>

#include "json.hpp"
#include "sociolex/error.hpp"

namespace sociolex {

namespace {

using nlohmann::json;

constexpr std::array<const char*, 51> kStates = {
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "DC", "FL", "GA",
    "HI", "ID", "IL", "IN", "IA", "KS", "KY", "LA", "ME", "MD", "MA",
    "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM", "NY",
    "NC", "ND", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX",
    "UT", "VT", "VA", "WA", "WV", "WI", "WY"};

bool whitespace_only(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

struct LineError {
  std::string what;
};

// Parses one JSONL record. Schema errors throw LineError; an unknown
// platform string throws ValidationError (never downgraded to a reject).
Message parse_line(const std::string& line, const LabelMap* label_map) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw LineError{std::string("invalid JSON: ") + e.what()};
  }
  if (!j.is_object()) throw LineError{"line is not a JSON object"};

  Message m;
  if (!j.contains("id") || !j["id"].is_string()) throw LineError{"missing string field 'id'"};
  m.id = j["id"].get<std::string>();

  if (!j.contains("platform") || !j["platform"].is_string()) {
    throw LineError{"missing string field 'platform'"};
  }
  m.platform = platform_from_string(j["platform"].get<std::string>());

  if (!j.contains("ts") || !j["ts"].is_number_integer()) {
    throw LineError{"missing integer field 'ts'"};
  }
  m.ts = j["ts"].get<std::int64_t>();
  if (m.ts <= 0) throw LineError{"ts must be > 0"};

  if (!j.contains("text") || !j["text"].is_string()) {
    throw LineError{"missing string field 'text'"};
  }
  m.text = j["text"].get<std::string>();
  if (m.text.empty() || whitespace_only(m.text)) throw LineError{"text empty after trim"};

  if (j.contains("community")) {
    if (!j["community"].is_string()) throw LineError{"'community' must be a string"};
    m.community = j["community"].get<std::string>();
  }
  if (j.contains("state")) {
    if (!j["state"].is_string()) throw LineError{"'state' must be a string"};
    auto st = j["state"].get<std::string>();
    if (!is_us_state_or_dc(st)) throw LineError{"unknown state code '" + st + "'"};
    m.state = std::move(st);
  }
  if (j.contains("demographics")) {
    if (!j["demographics"].is_object()) throw LineError{"'demographics' must be an object"};
    auto demo = std::make_shared<Demographics>();
    for (auto it = j["demographics"].begin(); it != j["demographics"].end(); ++it) {
      if (!it.value().is_number()) throw LineError{"demographic '" + it.key() + "' is not numeric"};
      (*demo)[it.key()] = it.value().get<double>();
    }
    m.demographics = std::move(demo);
  }
  if (label_map && m.community) {
    m.labels = label_map->lookup(*m.community);
  }
  return m;
}

}  // namespace

Platform platform_from_string(const std::string& s) {
  if (s == "reddit") return Platform::reddit;
  if (s == "twitter") return Platform::twitter;
  if (s == "other") return Platform::other;
  throw ValidationError("unknown platform '" + s + "'");
}

const char* to_string(Platform p) {
  switch (p) {
    case Platform::reddit: return "reddit";
    case Platform::twitter: return "twitter";
    default: return "other";
  }
}

bool is_us_state_or_dc(const std::string& code) {
  return std::any_of(kStates.begin(), kStates.end(),
                     [&](const char* s) { return code == s; });
}

LabelMap LabelMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open label map: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("label map " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("label map " + path + ": not a JSON object");
  LabelMap lm;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_array()) {
      throw ValidationError("label map " + path + ": value for '" + it.key() + "' is not a list");
    }
    Labels labels;
    for (const auto& v : it.value()) {
      if (!v.is_string()) {
        throw ValidationError("label map " + path + ": non-string label under '" + it.key() + "'");
      }
      const auto s = v.get<std::string>();
      const auto colon = s.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) {
        throw ValidationError("label map " + path + ": label '" + s +
                              "' is not category:identity");
      }
      labels.push_back(s);
    }
    lm.add(it.key(), labels);
  }
  return lm;
}

void LabelMap::add(const std::string& community, const Labels& labels) {
  Labels sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  map_[community] = std::make_shared<const Labels>(std::move(sorted));
}

std::shared_ptr<const Labels> LabelMap::lookup(const std::string& community) const {
  auto it = map_.find(community);
  return it == map_.end() ? nullptr : it->second;
}

JsonlReader::JsonlReader(const std::string& path, Options opts)
    : in_(path), path_(path), opts_(opts) {
  if (!in_) throw ValidationError("cannot open corpus file: " + path);
}

std::optional<Message> JsonlReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++lines_;
    try {
      Message m = parse_line(line, opts_.label_map);
      ++yielded_;
      return m;
    } catch (const LineError& e) {
      if (opts_.strict) {
        throw ValidationError(path_ + ":" + std::to_string(lines_) + ": " + e.what);
      }
      ++rejects_;
    } catch (const ValidationError& e) {
      // Unknown platform aborts in either mode; attach the line number.
      throw ValidationError(path_ + ":" + std::to_string(lines_) + ": " + e.what());
    }
  }
  return std::nullopt;
}

std::vector<Message> read_messages(const std::string& path, JsonlReader::Options opts) {
  JsonlReader r(path, opts);
  std::vector<Message> out;
  while (auto m = r.next()) out.push_back(std::move(*m));
  return out;
}

}  // namespace sociolex
