#include "sociolex/association.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <set>

#include "json.hpp"
#include "sociolex/csv.hpp"
#include "sociolex/error.hpp"
#include "sociolex/kernels.hpp"
#include "sociolex/rng.hpp"

namespace sociolex {

namespace {
using nlohmann::json;

double percentile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  if (rank == 0) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

}  // namespace

PoleSets PoleSets::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open pole set file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("pole set " + path + ": " + e.what());
  }
  PoleSets p;
  try {
    p.name = j.at("name").get<std::string>();
    for (const auto& w : j.at("male")) p.male.push_back(w.get<std::string>());
    for (const auto& w : j.at("female")) p.female.push_back(w.get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError("pole set " + path + ": " + e.what());
  }
  p.validate();
  return p;
}

void PoleSets::validate() const {
  if (male.empty() || female.empty()) {
    throw ValidationError("pole set '" + name + "': both sets must be non-empty");
  }
  std::set<std::string> a(male.begin(), male.end());
  std::set<std::string> b(female.begin(), female.end());
  if (a.size() != male.size() || b.size() != female.size()) {
    throw ValidationError("pole set '" + name + "': duplicate words within a set");
  }
  for (const auto& w : male) {
    if (b.count(w)) {
      throw ValidationError("pole set '" + name + "': '" + w + "' appears in both sets");
    }
  }
  for (const auto& lists : {&male, &female}) {
    for (const auto& w : *lists) {
      if (w.empty() || std::any_of(w.begin(), w.end(), [](unsigned char c) {
            return std::isupper(c) || std::isspace(c);
          })) {
        throw ValidationError("pole set '" + name + "': '" + w +
                              "' is not a lowercase single token");
      }
    }
  }
}

namespace {

// Mean cosine against the in-vocabulary members of one pole list.
double mean_cosine(const EmbeddingSpace& space, std::span<const float> target,
                   const std::vector<std::string>& words,
                   std::vector<std::string>* missing) {
  double acc = 0.0;
  int used = 0;
  for (const auto& w : words) {
    const int idx = space.index_of(w);
    if (idx < 0) {
      if (missing) missing->push_back(w);
      continue;
    }
    acc += kern::cosine(target.data(), space.vector(idx).data(), target.size());
    ++used;
  }
  return used ? acc / used : 0.0;
}

}  // namespace

AssociationResult association_difference(const EmbeddingSpace& space,
                                         const std::string& target,
                                         const PoleSets& poles) {
  const int t = space.index_of(target);
  if (t < 0) {
    throw AnalysisError("association target '" + target + "' is out of vocabulary");
  }
  AssociationResult res;
  const double male = mean_cosine(space, space.vector(t), poles.male, &res.missing_male);
  const double female =
      mean_cosine(space, space.vector(t), poles.female, &res.missing_female);
  const std::size_t male_in = poles.male.size() - res.missing_male.size();
  const std::size_t female_in = poles.female.size() - res.missing_female.size();
  auto coverage_error = [&](const char* which, const std::vector<std::string>& missing) {
    std::string msg = std::string("pole coverage below 50% for the ") + which +
                      " set; missing:";
    for (const auto& w : missing) msg += " " + w;
    return AnalysisError(msg);
  };
  if (male_in * 2 < poles.male.size()) throw coverage_error("male", res.missing_male);
  if (female_in * 2 < poles.female.size()) throw coverage_error("female", res.missing_female);
  res.difference = male - female;
  return res;
}

std::vector<AssociationPoint> association_series(
    const std::map<std::string, Sentences>& per_period, const std::string& target,
    const PoleSets& poles, const SeriesParams& params, std::uint64_t seed) {
  if (per_period.size() < 2) {
    throw ValidationError("association series needs at least 2 periods");
  }
  if (params.runs < 1) throw ValidationError("runs must be >= 1");

  std::vector<AssociationPoint> out;
  std::size_t period_idx = 0;
  for (const auto& [period, sentences] : per_period) {
    // Deal sentences round-robin into disjoint splits.
    std::vector<Sentences> splits(static_cast<std::size_t>(params.runs));
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      splits[i % static_cast<std::size_t>(params.runs)].push_back(sentences[i]);
    }
    std::vector<std::uint64_t> split_seeds(splits.size());
    for (std::size_t r = 0; r < splits.size(); ++r) {
      split_seeds[r] =
          Rng(seed).fork(period_idx * static_cast<std::size_t>(params.runs) + r).next_u64();
    }

    // Each split trains its own single-threaded space; splits may run
    // concurrently without affecting the result.
    std::vector<EmbeddingSpace> spaces(splits.size());
    auto train_split = [&](std::size_t r) {
      try {
        spaces[r] = train_embeddings(splits[r], params.train, split_seeds[r], period);
      } catch (const Error& e) {
        throw AnalysisError("period " + period + ", split " + std::to_string(r + 1) +
                            ": " + e.what());
      }
    };
    if (params.threads > 1 && splits.size() > 1) {
      std::vector<std::future<void>> futs;
      futs.reserve(splits.size());
      for (std::size_t r = 0; r < splits.size(); ++r) {
        futs.push_back(std::async(std::launch::async, train_split, r));
      }
      for (auto& f : futs) f.get();
    } else {
      for (std::size_t r = 0; r < splits.size(); ++r) train_split(r);
    }

    AssociationPoint pt;
    pt.period = period;
    std::vector<std::vector<double>> male_cos(spaces.size());
    std::vector<std::vector<double>> female_cos(spaces.size());
    for (std::size_t r = 0; r < spaces.size(); ++r) {
      const auto res = association_difference(spaces[r], target, poles);
      pt.run_values.push_back(res.difference);
      if (params.ci_mode == CiMode::pole_words) {
        const int t = spaces[r].index_of(target);
        for (const auto& w : poles.male) {
          const int idx = spaces[r].index_of(w);
          male_cos[r].push_back(idx < 0 ? std::nan("") : kern::cosine(
              spaces[r].vector(t).data(), spaces[r].vector(idx).data(),
              static_cast<std::size_t>(spaces[r].dim())));
        }
        for (const auto& w : poles.female) {
          const int idx = spaces[r].index_of(w);
          female_cos[r].push_back(idx < 0 ? std::nan("") : kern::cosine(
              spaces[r].vector(t).data(), spaces[r].vector(idx).data(),
              static_cast<std::size_t>(spaces[r].dim())));
        }
      }
    }
    pt.difference = std::accumulate(pt.run_values.begin(), pt.run_values.end(), 0.0) /
                    static_cast<double>(pt.run_values.size());

    Rng rng = Rng(seed).fork(0xb007 + period_idx);
    if (pt.run_values.size() == 1 && params.ci_mode == CiMode::runs) {
      pt.ci_low = pt.ci_high = pt.difference;
    } else {
      std::vector<double> stats(static_cast<std::size_t>(params.bootstrap_iters));
      for (auto& s : stats) {
        if (params.ci_mode == CiMode::runs) {
          double acc = 0.0;
          for (std::size_t i = 0; i < pt.run_values.size(); ++i) {
            acc += pt.run_values[rng.next_below(pt.run_values.size())];
          }
          s = acc / static_cast<double>(pt.run_values.size());
        } else {
          // Resample pole words; reuse the same resampled sets across runs.
          std::vector<std::size_t> midx(poles.male.size());
          std::vector<std::size_t> fidx(poles.female.size());
          for (auto& m : midx) m = rng.next_below(poles.male.size());
          for (auto& f : fidx) f = rng.next_below(poles.female.size());
          double acc = 0.0;
          for (std::size_t r = 0; r < male_cos.size(); ++r) {
            double ma = 0.0, fa = 0.0;
            int mc = 0, fc = 0;
            for (const auto m : midx) {
              if (!std::isnan(male_cos[r][m])) { ma += male_cos[r][m]; ++mc; }
            }
            for (const auto f : fidx) {
              if (!std::isnan(female_cos[r][f])) { fa += female_cos[r][f]; ++fc; }
            }
            acc += (mc ? ma / mc : 0.0) - (fc ? fa / fc : 0.0);
          }
          s = acc / static_cast<double>(male_cos.size());
        }
      }
      std::sort(stats.begin(), stats.end());
      pt.ci_low = percentile_sorted(stats, 0.025);
      pt.ci_high = percentile_sorted(stats, 0.975);
    }
    out.push_back(std::move(pt));
    ++period_idx;
  }
  return out;
}

std::vector<std::string> shared_vocabulary(const EmbeddingSpace& a,
                                           const EmbeddingSpace& b) {
  std::vector<std::string> shared;
  for (const auto& w : a.vocab()) {
    if (b.contains(w)) shared.push_back(w);
  }
  return shared;
}

namespace {

// Rows of the shared vocabulary, mean-centered then unit-normalized.
Eigen::MatrixXd centered_rows(const EmbeddingSpace& space,
                              const std::vector<std::string>& shared) {
  const int d = space.dim();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(shared.size()), d);
  for (std::size_t i = 0; i < shared.size(); ++i) {
    const int idx = space.index_of(shared[i]);
    if (idx < 0) throw AnalysisError("word '" + shared[i] + "' missing from one space");
    const auto v = space.vector(idx);
    for (int j = 0; j < d; ++j) M(static_cast<Eigen::Index>(i), j) = v[j];
  }
  const Eigen::RowVectorXd mean = M.colwise().mean();
  M.rowwise() -= mean;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    const double norm = M.row(i).norm();
    if (norm > 0.0) M.row(i) /= norm;
  }
  return M;
}

}  // namespace

Eigen::MatrixXd procrustes_align(const EmbeddingSpace& a, const EmbeddingSpace& b,
                                 const std::vector<std::string>& shared) {
  if (shared.size() < 2) {
    throw AnalysisError("procrustes needs at least 2 shared words, got " +
                        std::to_string(shared.size()));
  }
  if (a.dim() != b.dim()) throw ValidationError("spaces have different dimensions");
  const Eigen::MatrixXd A = centered_rows(a, shared);
  const Eigen::MatrixXd B = centered_rows(b, shared);
  const Eigen::MatrixXd M = A.transpose() * B;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().size() == 0 || svd.singularValues()(0) <= 0.0) {
    throw AnalysisError("degenerate cross-covariance: no alignment exists");
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

AnchorReport anchor_stability(const EmbeddingSpace& a, const EmbeddingSpace& b,
                              const std::vector<std::string>& anchors) {
  if (anchors.empty()) throw ValidationError("empty anchor list");
  for (const auto& w : anchors) {
    if (!a.contains(w)) throw AnalysisError("anchor '" + w + "' missing from " +
                                            (a.period().empty() ? "space A" : a.period()));
    if (!b.contains(w)) throw AnalysisError("anchor '" + w + "' missing from " +
                                            (b.period().empty() ? "space B" : b.period()));
  }
  const auto shared = shared_vocabulary(a, b);
  const Eigen::MatrixXd W = procrustes_align(a, b, shared);
  const Eigen::MatrixXd A = centered_rows(a, shared);
  const Eigen::MatrixXd B = centered_rows(b, shared);
  const Eigen::MatrixXd AW = A * W;

  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < shared.size(); ++i) pos[shared[i]] = i;

  AnchorReport report;
  double acc = 0.0;
  double min_cos = 2.0;
  for (const auto& w : anchors) {
    const auto i = static_cast<Eigen::Index>(pos.at(w));
    const double denom = AW.row(i).norm() * B.row(i).norm();
    const double c = denom > 0.0 ? AW.row(i).dot(B.row(i)) / denom : 0.0;
    report.anchors.push_back(AnchorCosine{w, c});
    acc += c;
    min_cos = std::min(min_cos, c);
  }
  report.mean_cosine = acc / static_cast<double>(anchors.size());
  report.min_cosine = min_cos;
  return report;
}

void write_association_csv(const std::string& path, const std::string& target,
                           const std::vector<AssociationPoint>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write association CSV: " + path);
  out << "year,target,diff,ci_low,ci_high\n";
  for (const auto& pt : series) {
    csv::write_row(out, {pt.period, target, csv::fmt(pt.difference),
                         csv::fmt(pt.ci_low), csv::fmt(pt.ci_high)});
  }
  if (!out) throw AnalysisError("write failed: " + path);
}

void write_anchor_csv(const std::string& path, const std::vector<AnchorRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write anchor CSV: " + path);
  out << "word,year_pair,cosine\n";
  for (const auto& r : rows) {
    csv::write_row(out, {r.word, r.year_pair, csv::fmt(r.cosine)});
  }
  if (!out) throw AnalysisError("write failed: " + path);
}

}  // namespace sociolex
