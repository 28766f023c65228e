#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sociolex/timebucket.hpp"

namespace sociolex {

enum class Platform { reddit, twitter, other };

Platform platform_from_string(const std::string& s);
const char* to_string(Platform p);

using Demographics = std::map<std::string, double>;
// Sorted, deduplicated "category:identity" tags.
using Labels = std::vector<std::string>;

struct Message {
  std::string id;
  Platform platform = Platform::other;
  std::int64_t ts = 0;  // seconds UTC, > 0
  std::string text;
  std::optional<std::string> community;
  std::shared_ptr<const Labels> labels;
  std::optional<std::string> state;  // 2-letter, 50 states + DC
  std::shared_ptr<const Demographics> demographics;
};

bool is_us_state_or_dc(const std::string& code);

// community name -> labels, from a JSON object {name: ["cat:id", ...]}.
class LabelMap {
 public:
  LabelMap() = default;
  static LabelMap load(const std::string& path);

  void add(const std::string& community, const Labels& labels);
  std::shared_ptr<const Labels> lookup(const std::string& community) const;
  std::size_t size() const { return map_.size(); }

 private:
  std::map<std::string, std::shared_ptr<const Labels>> map_;
};

// Streaming JSON-Lines reader. Memory is bounded by one record regardless of
// file size. In lenient mode malformed lines are counted and skipped; in
// strict mode the first malformed line aborts with its line number. A line
// whose platform field is an unrecognized string always aborts.
class JsonlReader {
 public:
  struct Options {
    bool strict = false;
    const LabelMap* label_map = nullptr;
  };

  explicit JsonlReader(const std::string& path) : JsonlReader(path, Options{}) {}
  JsonlReader(const std::string& path, Options opts);

  // nullopt at end of file.
  std::optional<Message> next();

  std::uint64_t lines_read() const { return lines_; }
  std::uint64_t yielded() const { return yielded_; }
  std::uint64_t rejects() const { return rejects_; }

 private:
  std::ifstream in_;
  std::string path_;
  Options opts_;
  std::uint64_t lines_ = 0;
  std::uint64_t yielded_ = 0;
  std::uint64_t rejects_ = 0;
};

// Reads the whole file; convenience for fixtures and small corpora.
std::vector<Message> read_messages(const std::string& path,
                                   JsonlReader::Options opts = {});

}  // namespace sociolex
