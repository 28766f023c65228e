#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

namespace sociolex {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes shared by the pipeline and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitAnalysisFailure = 1;
inline constexpr int kExitValidationFailure = 2;

// Parses, validates, and default-fills a run configuration. Relative paths
// resolve against the config file's directory. Throws ValidationError with
// the offending field on any problem.
class RunConfig {
 public:
  static RunConfig load(const std::string& path);
  static RunConfig from_json(const nlohmann::ordered_json& doc,
                             const std::string& base_dir);

  const nlohmann::ordered_json& normalized() const { return doc_; }
  std::string serialized() const;  // stable round-trip form

 private:
  nlohmann::ordered_json doc_;
};

// Executes every analysis block in order, writes one result file per
// analysis plus manifest.json into the output directory, and returns an
// exit code (validation failures throw before anything is written; analysis
// failures are recorded in the manifest and turn into exit code 1).
int run_pipeline(const RunConfig& config, std::ostream& log);

// Parallelism cap from SOCIOLEX_THREADS (defaults to 1).
int configured_threads();

}  // namespace sociolex
