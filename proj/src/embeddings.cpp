#include "sociolex/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sociolex/error.hpp"
#include "sociolex/kernels.hpp"
#include "sociolex/rng.hpp"

namespace sociolex {

EmbeddingSpace::EmbeddingSpace(std::vector<std::string> vocab, int dim, std::string period)
    : vocab_(std::move(vocab)), dim_(dim), period_(std::move(period)) {
  data_.assign(vocab_.size() * static_cast<std::size_t>(dim_), 0.0f);
  index_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    index_.emplace(vocab_[i], static_cast<int>(i));
  }
}

int EmbeddingSpace::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

std::span<const float> EmbeddingSpace::vector(int index) const {
  return {data_.data() + static_cast<std::size_t>(index) * dim_,
          static_cast<std::size_t>(dim_)};
}

std::span<float> EmbeddingSpace::mutable_vector(int index) {
  return {data_.data() + static_cast<std::size_t>(index) * dim_,
          static_cast<std::size_t>(dim_)};
}

void EmbeddingSpace::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write vectors: " + path);
  out << vocab_.size() << ' ' << dim_ << '\n';
  char buf[48];
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    out << vocab_[i];
    const auto v = vector(static_cast<int>(i));
    for (int j = 0; j < dim_; ++j) {
      auto res = std::to_chars(buf, buf + sizeof buf, v[j]);
      out.put(' ');
      out.write(buf, res.ptr - buf);
    }
    out.put('\n');
  }
  if (!out) throw AnalysisError("write failed: " + path);
}

EmbeddingSpace EmbeddingSpace::load(const std::string& path, std::string period) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open vectors: " + path);
  std::size_t vocab_size = 0;
  int dim = 0;
  in >> vocab_size >> dim;
  if (!in || dim <= 0) throw ValidationError(path + ": bad vector file header");
  std::vector<std::string> vocab(vocab_size);
  std::vector<float> rows(vocab_size * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < vocab_size; ++i) {
    if (!(in >> vocab[i])) throw ValidationError(path + ": truncated vector file");
    for (int j = 0; j < dim; ++j) {
      if (!(in >> rows[i * static_cast<std::size_t>(dim) + j])) {
        throw ValidationError(path + ": truncated vector row for '" + vocab[i] + "'");
      }
    }
  }
  EmbeddingSpace space(std::move(vocab), dim, std::move(period));
  std::copy(rows.begin(), rows.end(), space.data_.begin());
  return space;
}

namespace {

struct Vocab {
  std::vector<std::string> words;       // sorted by (count desc, word asc)
  std::vector<std::uint64_t> counts;
  std::unordered_map<std::string, int> index;
  std::uint64_t total = 0;
};

Vocab build_vocab(const Sentences& corpus, int min_count) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& sent : corpus) {
    for (const auto& tok : sent) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, c] : counts) {
    if (c >= static_cast<std::uint64_t>(min_count)) kept.emplace_back(w, c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  for (auto& [w, c] : kept) {
    v.index.emplace(w, static_cast<int>(v.words.size()));
    v.words.push_back(w);
    v.counts.push_back(c);
    v.total += c;
  }
  return v;
}

// Walker alias table over unigram^0.75, the standard negative-sampling
// distribution.
class AliasTable {
 public:
  explicit AliasTable(const std::vector<std::uint64_t>& counts) {
    const std::size_t n = counts.size();
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = std::pow(static_cast<double>(counts[i]), 0.75);
      total += w[i];
    }
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<std::size_t> small, large;
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = w[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = static_cast<int>(l);
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::size_t i : large) prob_[i] = 1.0;
    for (std::size_t i : small) prob_[i] = 1.0;
  }

  int sample(Rng& rng) const {
    const std::size_t i = rng.next_below(prob_.size());
    return rng.next_double() < prob_[i] ? static_cast<int>(i) : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<int> alias_;
};

inline float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }

}  // namespace

EmbeddingSpace train_embeddings(const Sentences& corpus, const TrainParams& params,
                                std::uint64_t seed, std::string period) {
  if (params.epochs < 1) {
    throw ValidationError("epochs must be >= 1: no training performed");
  }
  if (params.dim < 1 || params.window < 1 || params.negatives < 1) {
    throw ValidationError("bad training parameters");
  }
  std::uint64_t token_count = 0;
  for (const auto& s : corpus) token_count += s.size();
  if (token_count < params.min_tokens) {
    throw AnalysisError("corpus slice has " + std::to_string(token_count) +
                        " tokens, below the documented minimum of " +
                        std::to_string(params.min_tokens) +
                        " (lower min_tokens explicitly to train anyway)");
  }

  const Vocab vocab = build_vocab(corpus, params.min_count);
  const std::size_t V = vocab.words.size();
  if (V < 2 || V <= static_cast<std::size_t>(params.negatives)) {
    throw AnalysisError("vocabulary too small after min_count filtering: " +
                        std::to_string(V) + " words");
  }

  // Sentences as vocabulary ids; out-of-vocabulary tokens drop out.
  std::vector<std::vector<int>> ids;
  ids.reserve(corpus.size());
  std::uint64_t vocab_tokens = 0;
  for (const auto& sent : corpus) {
    std::vector<int> row;
    row.reserve(sent.size());
    for (const auto& tok : sent) {
      auto it = vocab.index.find(tok);
      if (it != vocab.index.end()) row.push_back(it->second);
    }
    vocab_tokens += row.size();
    if (row.size() >= 2) ids.push_back(std::move(row));
  }
  if (ids.empty()) throw AnalysisError("no trainable sentences after vocabulary filtering");

  // Subsampling keep probability per word.
  std::vector<float> keep(V, 1.0f);
  if (params.subsample > 0.0) {
    for (std::size_t i = 0; i < V; ++i) {
      const double f = static_cast<double>(vocab.counts[i]) / static_cast<double>(vocab.total);
      const double k = std::sqrt(params.subsample / f) + params.subsample / f;
      keep[i] = static_cast<float>(std::min(1.0, k));
    }
  }

  const int dim = params.dim;
  EmbeddingSpace space(vocab.words, dim, std::move(period));
  space.meta().params = params;
  space.meta().seed = seed;
  space.meta().token_count = token_count;
  space.meta().vocab_tokens = vocab_tokens;

  Rng rng(seed);
  for (std::size_t i = 0; i < V; ++i) {
    auto row = space.mutable_vector(static_cast<int>(i));
    for (int j = 0; j < dim; ++j) {
      row[j] = static_cast<float>((rng.next_double() - 0.5) / dim);
    }
  }
  std::vector<float> w_out(V * static_cast<std::size_t>(dim), 0.0f);
  const AliasTable negatives(vocab.counts);

  std::vector<float> hidden(static_cast<std::size_t>(dim));
  std::vector<float> grad_h(static_cast<std::size_t>(dim));
  std::vector<int> kept;

  const double total_planned =
      static_cast<double>(params.epochs) * static_cast<double>(vocab_tokens);
  std::uint64_t processed = 0;

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::uint64_t epoch_examples = 0;
    for (const auto& sent : ids) {
      kept.clear();
      for (const int w : sent) {
        ++processed;
        if (keep[static_cast<std::size_t>(w)] >= 1.0f ||
            rng.next_double() < keep[static_cast<std::size_t>(w)]) {
          kept.push_back(w);
        }
      }
      if (kept.size() < 2) continue;
      const float lr = std::max(
          params.min_alpha,
          params.alpha * static_cast<float>(1.0 - static_cast<double>(processed) / total_planned));
      for (std::size_t c = 0; c < kept.size(); ++c) {
        const int eff = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(params.window)));
        const std::size_t lo = c >= static_cast<std::size_t>(eff) ? c - static_cast<std::size_t>(eff) : 0;
        const std::size_t hi = std::min(kept.size(), c + static_cast<std::size_t>(eff) + 1);
        const int n_ctx = static_cast<int>(hi - lo) - 1;
        if (n_ctx < 1) continue;

        std::fill(hidden.begin(), hidden.end(), 0.0f);
        for (std::size_t t = lo; t < hi; ++t) {
          if (t == c) continue;
          kern::add(space.vector(kept[t]).data(), hidden.data(), hidden.size());
        }
        kern::scal(1.0f / static_cast<float>(n_ctx), hidden.data(), hidden.size());
        std::fill(grad_h.begin(), grad_h.end(), 0.0f);

        const int positive = kept[c];
        double example_loss = 0.0;
        for (int neg = 0; neg <= params.negatives; ++neg) {
          int target = positive;
          float label = 1.0f;
          if (neg > 0) {
            target = negatives.sample(rng);
            if (target == positive) continue;
            label = 0.0f;
          }
          float* out_row = w_out.data() + static_cast<std::size_t>(target) * dim;
          const float s = kern::dot(out_row, hidden.data(), hidden.size());
          const float f = sigmoidf(s);
          const float g = f - label;  // dL/ds
          example_loss += label > 0.5f ? -std::log(std::max(1e-12f, f))
                                       : -std::log(std::max(1e-12f, 1.0f - f));
          kern::axpy(g, out_row, grad_h.data(), grad_h.size());
          kern::axpy(-lr * g, hidden.data(), out_row, hidden.size());
        }
        // Exact gradient of the mean-of-context hidden layer.
        const float scale = -lr / static_cast<float>(n_ctx);
        for (std::size_t t = lo; t < hi; ++t) {
          if (t == c) continue;
          kern::axpy(scale, grad_h.data(), space.mutable_vector(kept[t]).data(),
                     grad_h.size());
        }
        epoch_loss += example_loss;
        ++epoch_examples;
      }
    }
    const double mean_loss =
        epoch_examples ? epoch_loss / static_cast<double>(epoch_examples) : 0.0;
    if (epoch == 0) space.meta().first_epoch_loss = mean_loss;
    space.meta().last_epoch_loss = mean_loss;
  }
  return space;
}

namespace cbowref {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

double loss(const std::vector<std::vector<double>>& w_in,
            const std::vector<std::vector<double>>& w_out, const Example& ex) {
  const std::size_t dim = w_in.at(0).size();
  std::vector<double> h(dim, 0.0);
  for (const int c : ex.context) {
    for (std::size_t j = 0; j < dim; ++j) h[j] += w_in[static_cast<std::size_t>(c)][j];
  }
  for (auto& v : h) v /= static_cast<double>(ex.context.size());
  auto dot_out = [&](int row) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s += w_out[static_cast<std::size_t>(row)][j] * h[j];
    return s;
  };
  double total = -std::log(sigmoid(dot_out(ex.positive)));
  for (const int n : ex.negatives) total += -std::log(sigmoid(-dot_out(n)));
  return total;
}

void gradients(const std::vector<std::vector<double>>& w_in,
               const std::vector<std::vector<double>>& w_out, const Example& ex,
               std::vector<std::vector<double>>& grad_in,
               std::vector<std::vector<double>>& grad_out) {
  const std::size_t dim = w_in.at(0).size();
  grad_in.assign(w_in.size(), std::vector<double>(dim, 0.0));
  grad_out.assign(w_out.size(), std::vector<double>(dim, 0.0));
  std::vector<double> h(dim, 0.0);
  for (const int c : ex.context) {
    for (std::size_t j = 0; j < dim; ++j) h[j] += w_in[static_cast<std::size_t>(c)][j];
  }
  for (auto& v : h) v /= static_cast<double>(ex.context.size());

  std::vector<double> grad_h(dim, 0.0);
  auto accumulate = [&](int row, double label) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s += w_out[static_cast<std::size_t>(row)][j] * h[j];
    const double g = sigmoid(s) - label;  // dL/ds
    for (std::size_t j = 0; j < dim; ++j) {
      grad_h[j] += g * w_out[static_cast<std::size_t>(row)][j];
      grad_out[static_cast<std::size_t>(row)][j] += g * h[j];
    }
  };
  accumulate(ex.positive, 1.0);
  for (const int n : ex.negatives) accumulate(n, 0.0);

  const double inv = 1.0 / static_cast<double>(ex.context.size());
  for (const int c : ex.context) {
    for (std::size_t j = 0; j < dim; ++j) {
      grad_in[static_cast<std::size_t>(c)][j] += inv * grad_h[j];
    }
  }
}

}  // namespace cbowref

}  // namespace sociolex
