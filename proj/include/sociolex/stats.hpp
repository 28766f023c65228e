#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sociolex/timebucket.hpp"
#include "sociolex/variables.hpp"

namespace sociolex {

// Conditional probability of a target among all uses of one variable.
struct Rate {
  double p = 0.0;
  std::uint64_t k = 0;  // target count
  std::uint64_t n = 0;  // conditioning count, >= 1 for a defined rate
};

// Either one variant surface or a whole gender class.
class RateTarget {
 public:
  static RateTarget variant(std::string surface);
  static RateTarget gender(GenderClass g);
  // "partner", or one of several variants ("partner|spouse").
  static RateTarget any_of(std::vector<std::string> surfaces);

  bool matches(const Occurrence& o) const;
  std::string label() const;

 private:
  std::variant<std::vector<std::string>, GenderClass> target_;
};

// Conjunctive occurrence filter; unset members do not constrain.
struct OccurrenceFilter {
  std::vector<Perspective> perspectives;   // empty = all
  std::vector<std::string> require_labels; // all must be present
  std::optional<std::string> community;
  std::optional<std::string> state;
  std::optional<std::int32_t> month_min;
  std::optional<std::int32_t> month_max;

  bool matches(const Occurrence& o) const;
};

// p = count(target) / count(all uses of `variable`) within the filter.
// Throws AnalysisError when the conditioning set is empty (p=0 is a result,
// an empty denominator is not).
Rate variant_rate(std::span<const Occurrence> occs, const std::string& variable,
                  const RateTarget& target, const OccurrenceFilter& filter = {});

struct BootstrapCi {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Resamples communities with replacement B times; the statistic is the
// unweighted mean of per-community rates. CI bounds are the nearest-rank
// 2.5/97.5 percentiles of the resampled statistics. Deterministic per seed.
BootstrapCi bootstrap_group_mean(const std::vector<double>& community_rates,
                                 int bootstrap_iters, std::uint64_t seed);

struct RatePoint {
  TimeBucket bucket;
  double p = 0.0;
  std::uint64_t k = 0;
  std::uint64_t n = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double boot_mean = 0.0;  // mean of the within-bucket resample statistics
};

struct RateSeries {
  Granularity granularity = Granularity::quarter;
  std::vector<RatePoint> points;                          // buckets ascending
  std::vector<std::pair<TimeBucket, std::uint64_t>> omitted;  // below min_n
};

// One point per bucket with n >= min_n; buckets below min_n are reported in
// `omitted`. Per-bucket CIs come from resampling occurrences within the
// bucket (bootstrap_iters = 0 leaves ci_low = p = ci_high).
RateSeries rate_series(std::span<const Occurrence> occs, const std::string& variable,
                       const RateTarget& target, Granularity granularity,
                       std::uint64_t min_n, int bootstrap_iters, std::uint64_t seed,
                       const OccurrenceFilter& filter = {});

struct TrendResult {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// Pearson correlation of y against x with a two-sided p-value from the
// Student-t transform. Requires n >= 3 and nonzero variance in y.
TrendResult pearson_trend(std::span<const double> x, std::span<const double> y);
// x = bucket index, y = rate (or the per-bucket bootstrap mean).
TrendResult pearson_trend(const RateSeries& series, bool use_bootstrap_means = false);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov: D = sup |ECDF_x - ECDF_y|, p from the
// asymptotic Kolmogorov distribution at sqrt(nx*ny/(nx+ny)) * D.
KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys);

struct QuartileAssignment {
  std::array<double, 3> breakpoints{};   // 25/50/75 nearest-rank percentiles
  std::map<std::string, int> quartile;   // unit -> 0..3
  std::array<std::size_t, 4> counts{};
};

// Breakpoints over units (each unit counted once); a value equal to a
// breakpoint goes to the lower quartile. Requires >= 4 units and >= 4
// distinct values.
QuartileAssignment quartile_assign(const std::map<std::string, double>& unit_values);

struct GroupStat {
  std::string group;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_communities = 0;
};

// Per-identity bootstrap comparison for every label under one category
// (e.g. "sexuality" -> sexuality:lgbt, sexuality:heterosexual). Communities
// contribute their within-community rate with equal weight.
std::vector<GroupStat> compare_label_groups(std::span<const Occurrence> occs,
                                            const std::string& variable,
                                            const RateTarget& target,
                                            const std::string& label_category,
                                            int bootstrap_iters, std::uint64_t seed,
                                            const OccurrenceFilter& filter = {});

struct QuartileComparison {
  QuartileAssignment assignment;
  std::vector<GroupStat> groups;  // Q1..Q4
  KsResult ks_top_vs_bottom;      // unit rates, Q4 vs Q1
};

// Stratifies units (communities, or states when community is absent) into
// quartiles of a demographic attribute; each unit's value is the mean of the
// attribute over its occurrences.
QuartileComparison compare_quartile_groups(std::span<const Occurrence> occs,
                                           const std::string& variable,
                                           const RateTarget& target,
                                           const std::string& attribute,
                                           int bootstrap_iters, std::uint64_t seed,
                                           const OccurrenceFilter& filter = {});

namespace detail {
// Complement CDF helpers exposed for the oracle tests.
double student_t_two_sided_p(double t, double dof);
double kolmogorov_q(double lambda);
}  // namespace detail

}  // namespace sociolex
