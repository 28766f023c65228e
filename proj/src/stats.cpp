#include "sociolex/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "sociolex/error.hpp"
#include "sociolex/rng.hpp"

namespace sociolex {

RateTarget RateTarget::variant(std::string surface) {
  RateTarget t;
  t.target_ = std::vector<std::string>{std::move(surface)};
  return t;
}

RateTarget RateTarget::gender(GenderClass g) {
  RateTarget t;
  t.target_ = g;
  return t;
}

RateTarget RateTarget::any_of(std::vector<std::string> surfaces) {
  if (surfaces.empty()) throw ValidationError("empty target variant list");
  RateTarget t;
  t.target_ = std::move(surfaces);
  return t;
}

bool RateTarget::matches(const Occurrence& o) const {
  if (const auto* surfaces = std::get_if<std::vector<std::string>>(&target_)) {
    return std::find(surfaces->begin(), surfaces->end(), o.variant) != surfaces->end();
  }
  return o.gender == std::get<GenderClass>(target_);
}

std::string RateTarget::label() const {
  if (const auto* surfaces = std::get_if<std::vector<std::string>>(&target_)) {
    std::string s;
    for (std::size_t i = 0; i < surfaces->size(); ++i) {
      if (i) s.push_back('|');
      s += (*surfaces)[i];
    }
    return s;
  }
  return std::string("gender:") + to_string(std::get<GenderClass>(target_));
}

bool OccurrenceFilter::matches(const Occurrence& o) const {
  if (!perspectives.empty() &&
      std::find(perspectives.begin(), perspectives.end(), o.perspective) ==
          perspectives.end()) {
    return false;
  }
  for (const auto& tag : require_labels) {
    if (!o.has_label(tag)) return false;
  }
  if (community && o.community != community) return false;
  if (state && o.state != state) return false;
  if (month_min && o.month < *month_min) return false;
  if (month_max && o.month > *month_max) return false;
  return true;
}

Rate variant_rate(std::span<const Occurrence> occs, const std::string& variable,
                  const RateTarget& target, const OccurrenceFilter& filter) {
  Rate r;
  for (const auto& o : occs) {
    if (o.variable != variable || !filter.matches(o)) continue;
    ++r.n;
    if (target.matches(o)) ++r.k;
  }
  if (r.n == 0) {
    throw AnalysisError("undefined rate: no occurrences of '" + variable +
                        "' pass the filter");
  }
  r.p = static_cast<double>(r.k) / static_cast<double>(r.n);
  return r;
}

namespace {

// Nearest-rank percentile of a sorted sample.
double percentile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  if (rank == 0) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

}  // namespace

BootstrapCi bootstrap_group_mean(const std::vector<double>& community_rates,
                                 int bootstrap_iters, std::uint64_t seed) {
  if (community_rates.empty()) {
    throw AnalysisError("bootstrap over an empty community list");
  }
  if (bootstrap_iters < 100) {
    throw ValidationError("bootstrap_iters must be >= 100");
  }
  const std::size_t m = community_rates.size();
  const double mean =
      std::accumulate(community_rates.begin(), community_rates.end(), 0.0) /
      static_cast<double>(m);
  Rng rng(seed);
  std::vector<double> stats(static_cast<std::size_t>(bootstrap_iters));
  for (auto& s : stats) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += community_rates[rng.next_below(m)];
    s = acc / static_cast<double>(m);
  }
  std::sort(stats.begin(), stats.end());
  return BootstrapCi{mean, percentile_sorted(stats, 0.025),
                     percentile_sorted(stats, 0.975)};
}

namespace {

std::int32_t month_to_bucket_index(std::int32_t month, Granularity g) {
  auto floor_div = [](std::int32_t a, std::int32_t b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
  };
  switch (g) {
    case Granularity::month: return month;
    case Granularity::quarter: return floor_div(month, 3);
    default: return floor_div(month, 12);
  }
}

}  // namespace

RateSeries rate_series(std::span<const Occurrence> occs, const std::string& variable,
                       const RateTarget& target, Granularity granularity,
                       std::uint64_t min_n, int bootstrap_iters, std::uint64_t seed,
                       const OccurrenceFilter& filter) {
  struct Cell {
    std::uint64_t k = 0;
    std::uint64_t n = 0;
  };
  std::map<std::int32_t, Cell> cells;
  for (const auto& o : occs) {
    if (o.variable != variable || !filter.matches(o)) continue;
    auto& c = cells[month_to_bucket_index(o.month, granularity)];
    ++c.n;
    if (target.matches(o)) ++c.k;
  }
  if (cells.empty()) {
    throw AnalysisError("empty rate series: no occurrences of '" + variable +
                        "' pass the filter");
  }
  RateSeries series;
  series.granularity = granularity;
  for (const auto& [idx, cell] : cells) {
    const TimeBucket bucket{granularity, idx};
    if (cell.n < min_n) {
      series.omitted.emplace_back(bucket, cell.n);
      continue;
    }
    RatePoint pt;
    pt.bucket = bucket;
    pt.k = cell.k;
    pt.n = cell.n;
    pt.p = static_cast<double>(cell.k) / static_cast<double>(cell.n);
    if (bootstrap_iters > 0) {
      // Within-bucket occurrence resample: Binomial(n, p) draws.
      Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(idx) + 0x10000u);
      std::vector<double> stats(static_cast<std::size_t>(bootstrap_iters));
      double acc = 0.0;
      for (auto& s : stats) {
        std::uint64_t hits = 0;
        for (std::uint64_t i = 0; i < cell.n; ++i) {
          if (rng.next_below(cell.n) < cell.k) ++hits;
        }
        s = static_cast<double>(hits) / static_cast<double>(cell.n);
        acc += s;
      }
      std::sort(stats.begin(), stats.end());
      pt.ci_low = percentile_sorted(stats, 0.025);
      pt.ci_high = percentile_sorted(stats, 0.975);
      pt.boot_mean = acc / static_cast<double>(bootstrap_iters);
    } else {
      pt.ci_low = pt.ci_high = pt.boot_mean = pt.p;
    }
    series.points.push_back(pt);
  }
  if (series.points.empty()) {
    throw AnalysisError("empty rate series: every bucket is below min_n=" +
                        std::to_string(min_n));
  }
  return series;
}

TrendResult pearson_trend(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: size mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw AnalysisError("pearson: need at least 3 points");
  const double nx = static_cast<double>(n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nx;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / nx;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (syy == 0.0) throw AnalysisError("pearson: zero variance in y");
  if (sxx == 0.0) throw AnalysisError("pearson: zero variance in x");
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  TrendResult res;
  res.r = r;
  res.n = n;
  const double one_minus_r2 = (1.0 - r) * (1.0 + r);
  if (one_minus_r2 <= 0.0) {
    res.p_value = 0.0;
  } else {
    const double t = r * std::sqrt((nx - 2.0) / one_minus_r2);
    res.p_value = detail::student_t_two_sided_p(t, nx - 2.0);
  }
  return res;
}

TrendResult pearson_trend(const RateSeries& series, bool use_bootstrap_means) {
  std::vector<double> x, y;
  x.reserve(series.points.size());
  y.reserve(series.points.size());
  for (const auto& pt : series.points) {
    x.push_back(static_cast<double>(pt.bucket.index));
    y.push_back(use_bootstrap_means ? pt.boot_mean : pt.p);
  }
  return pearson_trend(x, y);
}

KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw AnalysisError("ks: empty sample");
  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  // Tail gap once one sample is exhausted and its ECDF sits at 1.
  d = std::max(d, std::abs(1.0 - static_cast<double>(j) / nb));
  d = std::max(d, std::abs(static_cast<double>(i) / na - 1.0));
  const double ne = na * nb / (na + nb);
  KsResult res;
  res.d = d;
  res.p_value = detail::kolmogorov_q(std::sqrt(ne) * d);
  return res;
}

QuartileAssignment quartile_assign(const std::map<std::string, double>& unit_values) {
  if (unit_values.size() < 4) {
    throw AnalysisError("quartile_assign: need at least 4 units");
  }
  std::vector<double> values;
  values.reserve(unit_values.size());
  std::set<double> distinct;
  for (const auto& [unit, v] : unit_values) {
    values.push_back(v);
    distinct.insert(v);
  }
  if (distinct.size() < 4) {
    throw AnalysisError("quartile_assign: fewer than 4 distinct values");
  }
  std::sort(values.begin(), values.end());
  QuartileAssignment qa;
  qa.breakpoints = {percentile_sorted(values, 0.25), percentile_sorted(values, 0.50),
                    percentile_sorted(values, 0.75)};
  for (const auto& [unit, v] : unit_values) {
    int q = 3;
    if (v <= qa.breakpoints[0]) q = 0;
    else if (v <= qa.breakpoints[1]) q = 1;
    else if (v <= qa.breakpoints[2]) q = 2;
    qa.quartile[unit] = q;
    ++qa.counts[static_cast<std::size_t>(q)];
  }
  return qa;
}

namespace {

// unit key -> rate of the target among the unit's occurrences
std::map<std::string, Rate> per_unit_rates(std::span<const Occurrence> occs,
                                           const std::string& variable,
                                           const RateTarget& target,
                                           const OccurrenceFilter& filter,
                                           bool by_state) {
  struct Cell {
    std::uint64_t k = 0, n = 0;
  };
  std::map<std::string, Cell> cells;
  for (const auto& o : occs) {
    if (o.variable != variable || !filter.matches(o)) continue;
    const std::optional<std::string>& unit = by_state ? o.state : o.community;
    if (!unit) continue;
    auto& c = cells[*unit];
    ++c.n;
    if (target.matches(o)) ++c.k;
  }
  std::map<std::string, Rate> rates;
  for (const auto& [unit, c] : cells) {
    rates[unit] = Rate{static_cast<double>(c.k) / static_cast<double>(c.n), c.k, c.n};
  }
  return rates;
}

}  // namespace

std::vector<GroupStat> compare_label_groups(std::span<const Occurrence> occs,
                                            const std::string& variable,
                                            const RateTarget& target,
                                            const std::string& label_category,
                                            int bootstrap_iters, std::uint64_t seed,
                                            const OccurrenceFilter& filter) {
  const std::string prefix = label_category + ":";
  std::set<std::string> groups;
  for (const auto& o : occs) {
    if (o.variable != variable || !o.labels) continue;
    for (const auto& tag : *o.labels) {
      if (tag.rfind(prefix, 0) == 0) groups.insert(tag);
    }
  }
  if (groups.empty()) {
    throw AnalysisError("no occurrences carry a '" + label_category + ":' label");
  }
  std::vector<GroupStat> out;
  std::uint64_t group_idx = 0;
  for (const auto& tag : groups) {
    OccurrenceFilter f = filter;
    f.require_labels.push_back(tag);
    const auto unit_rates = per_unit_rates(occs, variable, target, f, false);
    ++group_idx;
    if (unit_rates.empty()) continue;
    std::vector<double> rates;
    rates.reserve(unit_rates.size());
    for (const auto& [unit, r] : unit_rates) rates.push_back(r.p);
    const auto ci = bootstrap_group_mean(rates, bootstrap_iters,
                                         Rng(seed).fork(group_idx).next_u64());
    out.push_back(GroupStat{tag, ci.mean, ci.ci_low, ci.ci_high, rates.size()});
  }
  return out;
}

QuartileComparison compare_quartile_groups(std::span<const Occurrence> occs,
                                           const std::string& variable,
                                           const RateTarget& target,
                                           const std::string& attribute,
                                           int bootstrap_iters, std::uint64_t seed,
                                           const OccurrenceFilter& filter) {
  // Units with a community keep it; otherwise the state stands in (Twitter
  // records carry no community).
  struct Agg {
    double sum = 0.0;
    std::uint64_t n = 0;
  };
  std::map<std::string, Agg> unit_attr;
  bool any_community = false;
  for (const auto& o : occs) {
    if (o.variable != variable || !filter.matches(o)) continue;
    if (o.community) any_community = true;
  }
  const bool by_state = !any_community;
  for (const auto& o : occs) {
    if (o.variable != variable || !filter.matches(o)) continue;
    const auto& unit = by_state ? o.state : o.community;
    if (!unit || !o.demographics) continue;
    auto it = o.demographics->find(attribute);
    if (it == o.demographics->end()) continue;
    auto& agg = unit_attr[*unit];
    agg.sum += it->second;
    ++agg.n;
  }
  std::map<std::string, double> unit_values;
  for (const auto& [unit, agg] : unit_attr) {
    unit_values[unit] = agg.sum / static_cast<double>(agg.n);
  }
  if (unit_values.size() < 4) {
    throw AnalysisError("quartile comparison: fewer than 4 units carry attribute '" +
                        attribute + "'");
  }
  QuartileComparison cmp;
  cmp.assignment = quartile_assign(unit_values);
  const auto unit_rates = per_unit_rates(occs, variable, target, filter, by_state);

  std::array<std::vector<double>, 4> rates_by_q;
  for (const auto& [unit, q] : cmp.assignment.quartile) {
    auto it = unit_rates.find(unit);
    if (it != unit_rates.end()) {
      rates_by_q[static_cast<std::size_t>(q)].push_back(it->second.p);
    }
  }
  for (int q = 0; q < 4; ++q) {
    const auto& rates = rates_by_q[static_cast<std::size_t>(q)];
    if (rates.empty()) continue;
    const auto ci = bootstrap_group_mean(
        rates, bootstrap_iters, Rng(seed).fork(static_cast<std::uint64_t>(q) + 1).next_u64());
    cmp.groups.push_back(GroupStat{"Q" + std::to_string(q + 1), ci.mean, ci.ci_low,
                                   ci.ci_high, rates.size()});
  }
  if (!rates_by_q[0].empty() && !rates_by_q[3].empty()) {
    cmp.ks_top_vs_bottom = ks_two_sample(rates_by_q[3], rates_by_q[0]);
  }
  return cmp;
}

namespace detail {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2Pi = 2.50662827463100050242;

double student_t_two_sided_p(double t, double dof) {
  const boost::math::students_t dist(dof);
  const double tail = boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::min(1.0, 2.0 * tail);
}

double kolmogorov_q(double lambda) {
  if (lambda <= 1e-9) return 1.0;
  if (lambda < 1.18) {
    // Dual theta-series converges fast for small lambda.
    const double f = std::exp(-kPi * kPi / (8.0 * lambda * lambda));
    const double p = (kSqrt2Pi / lambda) *
                     (f + std::pow(f, 9) + std::pow(f, 25) + std::pow(f, 49));
    return std::max(0.0, 1.0 - p);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace detail

}  // namespace sociolex
