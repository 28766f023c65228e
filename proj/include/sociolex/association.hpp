#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "sociolex/embeddings.hpp"

namespace sociolex {

// Two disjoint reference word lists acting as semantic poles.
struct PoleSets {
  std::string name;
  std::vector<std::string> male;
  std::vector<std::string> female;

  static PoleSets load(const std::string& path);
  void validate() const;
};

struct AssociationResult {
  double difference = 0.0;  // mean cos(target, male) - mean cos(target, female)
  std::vector<std::string> missing_male;
  std::vector<std::string> missing_female;
};

// Requires the target in vocabulary and at least half of each pole set;
// missing pole words are listed in the result.
AssociationResult association_difference(const EmbeddingSpace& space,
                                         const std::string& target,
                                         const PoleSets& poles);

struct AssociationPoint {
  std::string period;
  double difference = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> run_values;
};

enum class CiMode { runs, pole_words };

struct SeriesParams {
  int runs = 5;               // disjoint splits per period, one space each
  int bootstrap_iters = 1000;
  CiMode ci_mode = CiMode::runs;
  TrainParams train;
  int threads = 1;  // spaces train concurrently; each space is single-threaded
};

// Periods are processed in map order (ascending labels). Sentences within a
// period are dealt round-robin into `runs` disjoint splits; the point
// estimate is the mean run difference and the CI a percentile bootstrap over
// the run values (or over pole words in CiMode::pole_words).
std::vector<AssociationPoint> association_series(
    const std::map<std::string, Sentences>& per_period, const std::string& target,
    const PoleSets& poles, const SeriesParams& params, std::uint64_t seed);

// Vocabulary present in both spaces, in space_a's frequency order.
std::vector<std::string> shared_vocabulary(const EmbeddingSpace& a,
                                           const EmbeddingSpace& b);

// Orthogonal map W minimizing ||A W - B||_F over the shared vocabulary,
// where the rows of A and B are the shared vectors after mean-centering and
// unit normalization: W = U V^T from the SVD of A^T B.
Eigen::MatrixXd procrustes_align(const EmbeddingSpace& a, const EmbeddingSpace& b,
                                 const std::vector<std::string>& shared);

struct AnchorCosine {
  std::string word;
  double cosine = 0.0;
};

struct AnchorReport {
  std::vector<AnchorCosine> anchors;
  double min_cosine = 0.0;
  double mean_cosine = 0.0;
};

// Aligns space_a onto space_b over their full shared vocabulary, then
// reports cos(a_w W, b_w) per anchor on the centered, normalized vectors.
// Every anchor must be present in both vocabularies.
AnchorReport anchor_stability(const EmbeddingSpace& a, const EmbeddingSpace& b,
                              const std::vector<std::string>& anchors);

void write_association_csv(const std::string& path, const std::string& target,
                           const std::vector<AssociationPoint>& series);

struct AnchorRow {
  std::string word;
  std::string year_pair;  // e.g. "2013-2014"
  double cosine = 0.0;
};

void write_anchor_csv(const std::string& path, const std::vector<AnchorRow>& rows);

}  // namespace sociolex
