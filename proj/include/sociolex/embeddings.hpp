#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace sociolex {

using Sentences = std::vector<std::vector<std::string>>;

struct TrainParams {
  int dim = 300;
  int window = 5;        // effective window sampled uniformly from [1, window]
  int negatives = 5;
  int min_count = 5;
  int epochs = 15;
  double subsample = 1e-3;  // frequent-word subsampling threshold; <= 0 disables
  float alpha = 0.025f;
  float min_alpha = 1e-4f;
  std::uint64_t min_tokens = 1'000'000;
};

struct TrainMeta {
  TrainParams params;
  std::uint64_t seed = 0;
  std::uint64_t token_count = 0;   // tokens seen in the corpus slice
  std::uint64_t vocab_tokens = 0;  // tokens covered by the kept vocabulary
  double first_epoch_loss = 0.0;
  double last_epoch_loss = 0.0;
};

// One trained vector space: vocabulary plus a row-major V x dim float matrix.
class EmbeddingSpace {
 public:
  EmbeddingSpace() = default;
  EmbeddingSpace(std::vector<std::string> vocab, int dim, std::string period);

  const std::vector<std::string>& vocab() const { return vocab_; }
  int dim() const { return dim_; }
  std::size_t size() const { return vocab_.size(); }
  const std::string& period() const { return period_; }

  int index_of(const std::string& token) const;  // -1 when absent
  bool contains(const std::string& token) const { return index_of(token) >= 0; }
  std::span<const float> vector(int index) const;
  std::span<float> mutable_vector(int index);

  TrainMeta& meta() { return meta_; }
  const TrainMeta& meta() const { return meta_; }

  // Plain-text interchange format: a "vocab_size dim" header line, then one
  // "token v1 ... vd" line per word.
  void save(const std::string& path) const;
  static EmbeddingSpace load(const std::string& path, std::string period = "");

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  std::vector<float> data_;
  int dim_ = 0;
  std::string period_;
  TrainMeta meta_;
};

// Trains CBOW with negative sampling on one corpus slice. Deterministic for
// a fixed (corpus, params, seed): vocabulary order, subsampling draws,
// negative draws, and update order are all fixed, and training runs on one
// thread. Requires epochs >= 1 and at least min_tokens input tokens.
EmbeddingSpace train_embeddings(const Sentences& corpus, const TrainParams& params,
                                std::uint64_t seed, std::string period = "");

// Reference double-precision implementation of one negative-sampling
// example: loss and analytic gradients for the mean-of-context CBOW
// objective. The float trainer applies exactly these formulas; the tests
// check this routine against finite differences and the trainer against it.
namespace cbowref {

struct Example {
  std::vector<int> context;    // input rows (context words)
  int positive = 0;            // output row of the center word
  std::vector<int> negatives;  // output rows of the sampled negatives
};

double loss(const std::vector<std::vector<double>>& w_in,
            const std::vector<std::vector<double>>& w_out, const Example& ex);

// Gradients of `loss` w.r.t. every parameter, dense matrices matching the
// shapes of w_in / w_out.
void gradients(const std::vector<std::vector<double>>& w_in,
               const std::vector<std::vector<double>>& w_out, const Example& ex,
               std::vector<std::vector<double>>& grad_in,
               std::vector<std::vector<double>>& grad_out);

}  // namespace cbowref

}  // namespace sociolex
