#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sociolex/error.hpp"
#include "sociolex/stats.hpp"
#include "sociolex/variables.hpp"
#include "synth.hpp"

using namespace sociolex;

namespace {

Occurrence occ(const std::string& variant, GenderClass g,
               Perspective p = Perspective::first, std::int32_t month = 500) {
  Occurrence o;
  o.message_id = "m";
  o.variable = "SigOther";
  o.variant = variant;
  o.gender = g;
  o.precursor = "my";
  o.perspective = p;
  o.month = month;
  return o;
}

std::vector<Occurrence> mixed_counts() {
  std::vector<Occurrence> occs;
  for (int i = 0; i < 2; ++i) occs.push_back(occ("partner", GenderClass::neutral));
  occs.push_back(occ("spouse", GenderClass::neutral));
  for (int i = 0; i < 3; ++i) occs.push_back(occ("wife", GenderClass::feminine));
  for (int i = 0; i < 2; ++i) occs.push_back(occ("husband", GenderClass::masculine));
  return occs;
}

}  // namespace

TEST_CASE("variant_rate computes conditional shares") {
  std::vector<Occurrence> occs;
  for (int i = 0; i < 3; ++i) occs.push_back(occ("partner", GenderClass::neutral));
  occs.push_back(occ("wife", GenderClass::feminine));
  const auto r = variant_rate(occs, "SigOther", RateTarget::variant("partner"));
  CHECK(r.p == doctest::Approx(0.75));
  CHECK(r.n == 4);

  const auto mixed = mixed_counts();
  const auto neutral = variant_rate(mixed, "SigOther", RateTarget::gender(GenderClass::neutral));
  CHECK(neutral.p == doctest::Approx(3.0 / 8.0));
  CHECK(neutral.n == 8);

  CHECK_THROWS_AS(variant_rate(occs, "Person", RateTarget::variant("dude")), AnalysisError);
}

TEST_CASE("planted bernoulli rate is recovered with the exact count") {
  const auto corpus = synth::bernoulli_corpus(0.3, 10000, 99);
  const auto spec = VariableSpec::load(testutil::data_file("variables/sigother.json"));
  const auto occs = extract_occurrences(corpus.messages, {spec});
  REQUIRE(occs.size() == 10000);
  const auto r = variant_rate(occs, "SigOther", RateTarget::variant("partner"));
  CHECK(r.k == corpus.hits);  // exact planted count, known from the generator
  CHECK(std::abs(r.p - 0.3) < 0.02);
}

TEST_CASE("class rates sum to one over any partition") {
  const auto mixed = mixed_counts();
  double total = 0.0;
  for (const auto g : {GenderClass::masculine, GenderClass::feminine, GenderClass::neutral}) {
    total += variant_rate(mixed, "SigOther", RateTarget::gender(g)).p;
  }
  CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("filters are monotone under conjunction") {
  Rng rng(5);
  std::vector<Occurrence> occs;
  auto lab1 = std::make_shared<Labels>(Labels{"sexuality:lgbt"});
  auto lab2 = std::make_shared<Labels>(Labels{"gender:women", "sexuality:lgbt"});
  for (int i = 0; i < 500; ++i) {
    auto o = occ(rng.next_double() < 0.4 ? "partner" : "wife",
                 GenderClass::neutral,
                 rng.next_double() < 0.5 ? Perspective::first : Perspective::third,
                 500 + static_cast<std::int32_t>(rng.next_below(24)));
    o.labels = rng.next_double() < 0.5 ? lab1 : lab2;
    occs.push_back(std::move(o));
  }
  OccurrenceFilter f1;
  f1.require_labels = {"sexuality:lgbt"};
  OccurrenceFilter f2;
  f2.perspectives = {Perspective::first};
  OccurrenceFilter both = f1;
  both.perspectives = {Perspective::first};
  const auto n1 = variant_rate(occs, "SigOther", RateTarget::variant("partner"), f1).n;
  const auto n2 = variant_rate(occs, "SigOther", RateTarget::variant("partner"), f2).n;
  const auto nb = variant_rate(occs, "SigOther", RateTarget::variant("partner"), both).n;
  CHECK(nb <= n1);
  CHECK(nb <= n2);
}

TEST_CASE("bootstrap degenerates for a single community") {
  const auto ci = bootstrap_group_mean({0.42}, 500, 7);
  CHECK(ci.mean == doctest::Approx(0.42));
  CHECK(ci.ci_low == doctest::Approx(0.42));
  CHECK(ci.ci_high == doctest::Approx(0.42));
}

TEST_CASE("two-community bootstrap endpoints come from the resample set") {
  const auto ci = bootstrap_group_mean({0.2, 0.4}, 10000, 321);
  CHECK(ci.mean == doctest::Approx(0.3));
  auto in_set = [](double v) {
    return std::abs(v - 0.2) < 1e-12 || std::abs(v - 0.3) < 1e-12 ||
           std::abs(v - 0.4) < 1e-12;
  };
  CHECK(in_set(ci.ci_low));
  CHECK(in_set(ci.ci_high));
  CHECK(ci.ci_low <= ci.ci_high);
}

TEST_CASE("bootstrap ci width approximates the analytic normal width") {
  Rng rng(2024);
  std::vector<double> rates(20);
  for (auto& r : rates) {
    r = std::clamp(0.5 + 0.05 * rng.next_normal(), 0.0, 1.0);
  }
  double mean = 0.0;
  for (const double r : rates) mean += r;
  mean /= 20.0;
  double var = 0.0;
  for (const double r : rates) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / 20.0);  // population sd, the resample sd
  const double analytic = 2.0 * 1.96 * sd / std::sqrt(20.0);
  const auto ci = bootstrap_group_mean(rates, 1000, 11);
  const double width = ci.ci_high - ci.ci_low;
  CHECK(std::abs(width - analytic) < 0.2 * analytic);
}

TEST_CASE("bootstrap is deterministic per seed") {
  Rng rng(88);
  std::vector<double> rates(20);
  for (auto& r : rates) r = rng.next_double();
  const auto a = bootstrap_group_mean(rates, 1000, 5);
  const auto b = bootstrap_group_mean(rates, 1000, 5);
  CHECK(a.ci_low == b.ci_low);
  CHECK(a.ci_high == b.ci_high);
  const auto c = bootstrap_group_mean(rates, 1000, 6);
  CHECK((c.ci_low != a.ci_low || c.ci_high != a.ci_high));
}

TEST_CASE("bootstrap validates inputs") {
  CHECK_THROWS_AS(bootstrap_group_mean({}, 1000, 1), AnalysisError);
  CHECK_THROWS_AS(bootstrap_group_mean({0.5}, 50, 1), ValidationError);
}

TEST_CASE("rate_series buckets and omits below min_n") {
  Rng rng(17);
  std::vector<Occurrence> occs;
  // 12 months at ~200 occurrences; month index 540 gets only 10
  for (std::int32_t m = 540; m < 552; ++m) {
    const int n = (m == 540) ? 10 : 200;
    for (int i = 0; i < n; ++i) {
      occs.push_back(occ(rng.next_double() < 0.5 ? "partner" : "wife",
                         GenderClass::neutral, Perspective::first, m));
    }
  }
  const auto series = rate_series(occs, "SigOther", RateTarget::variant("partner"),
                                  Granularity::month, 50, 200, 9);
  CHECK(series.points.size() == 11);
  REQUIRE(series.omitted.size() == 1);
  CHECK(series.omitted[0].first.index == 540);
  CHECK(series.omitted[0].second == 10);
  for (const auto& pt : series.points) {
    CHECK(std::abs(pt.p - 0.5) < 0.15);
    CHECK(pt.ci_low <= pt.p);
    CHECK(pt.p <= pt.ci_high);
  }
  // buckets strictly increasing
  for (std::size_t i = 1; i < series.points.size(); ++i) {
    CHECK(series.points[i].bucket.index > series.points[i - 1].bucket.index);
  }

  OccurrenceFilter none;
  none.month_min = 9999;
  CHECK_THROWS_AS(rate_series(occs, "SigOther", RateTarget::variant("partner"),
                              Granularity::month, 50, 0, 9, none),
                  AnalysisError);
  CHECK_THROWS_WITH_AS(rate_series(occs, "SigOther", RateTarget::variant("partner"),
                                   Granularity::month, 100000, 0, 9),
                       doctest::Contains("min_n"), AnalysisError);
}

TEST_CASE("planted monotone drift produces increasing quarterly rates") {
  Rng rng(2718);
  std::vector<Occurrence> occs;
  const std::int32_t q0 = 172;  // quarter index: 2013-Q1
  for (int q = 0; q < 8; ++q) {
    const double p = 0.2 + 0.2 * q / 7.0 + 0.0;  // 0.2 -> 0.4
    for (int i = 0; i < 4000; ++i) {
      const std::int32_t month = (q0 + q) * 3 + static_cast<std::int32_t>(rng.next_below(3));
      occs.push_back(occ(rng.next_double() < p ? "partner" : "wife",
                         GenderClass::neutral, Perspective::first, month));
    }
  }
  const auto series = rate_series(occs, "SigOther", RateTarget::variant("partner"),
                                  Granularity::quarter, 30, 0, 1);
  REQUIRE(series.points.size() == 8);
  for (std::size_t i = 1; i < series.points.size(); ++i) {
    CHECK(series.points[i].p > series.points[i - 1].p - 0.02);  // noise tolerance
  }
  const auto trend = pearson_trend(series);
  CHECK(trend.r > 0.9);
  CHECK(trend.p_value < 0.01);
}

TEST_CASE("pearson exact and degenerate cases") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> inc{2, 4, 6, 8, 10};
  const auto exact = pearson_trend(x, inc);
  CHECK(exact.r == doctest::Approx(1.0));
  CHECK(exact.p_value == 0.0);

  const std::vector<double> constant{3, 3, 3, 3, 3};
  CHECK_THROWS_WITH_AS(pearson_trend(x, constant), doctest::Contains("variance"),
                       AnalysisError);
  CHECK_THROWS_AS(pearson_trend(std::vector<double>{1, 2}, std::vector<double>{3, 4}),
                  AnalysisError);
}

TEST_CASE("pearson matches the reference fixture") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  const std::vector<double> y{0.1, 0.3, 0.2, 0.5, 0.4, 0.6};
  const auto res = pearson_trend(x, y);
  const double r_ref = static_cast<double>(oracle::pearson_r(x, y));
  CHECK(std::abs(res.r - r_ref) < 1e-10);
  const double t = r_ref * std::sqrt((6 - 2) / (1 - r_ref * r_ref));
  const double p_ref = oracle::t_two_sided_p(t, 4.0);
  CHECK(std::abs(res.p_value - p_ref) < 1e-6);
}

TEST_CASE("pearson agrees with the oracle across random fixtures") {
  Rng rng(606);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.next_below(40);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(i) + rng.next_double();
      y[i] = rng.next_double() + 0.3 * static_cast<double>(i) * rng.next_double();
    }
    TrendResult res;
    try {
      res = pearson_trend(x, y);
    } catch (const AnalysisError&) {
      continue;  // zero-variance draw
    }
    const double r_ref = static_cast<double>(oracle::pearson_r(x, y));
    CHECK(std::abs(res.r - r_ref) < 1e-10);
    if (std::abs(r_ref) < 1.0 - 1e-12) {
      const double t = r_ref * std::sqrt((static_cast<double>(n) - 2) / (1 - r_ref * r_ref));
      CHECK(std::abs(res.p_value - oracle::t_two_sided_p(t, static_cast<double>(n) - 2)) <
            1e-6);
    }
  }
}

TEST_CASE("pearson is invariant to positive affine transforms") {
  Rng rng(7321);
  std::vector<double> x(25), y(25);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.next_double() * 10;
    y[i] = rng.next_double() + 0.2 * x[i];
  }
  const auto base = pearson_trend(x, y);
  auto x2 = x;
  auto y2 = y;
  for (auto& v : x2) v = 3.7 * v + 11.0;
  for (auto& v : y2) v = 0.002 * v - 5.0;
  const auto scaled = pearson_trend(x2, y2);
  CHECK(std::abs(base.r - scaled.r) < 1e-12);
}

TEST_CASE("ks basics") {
  const std::vector<double> a{0.1, 0.2, 0.3, 0.4};
  const auto same = ks_two_sample(a, a);
  CHECK(same.d == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));

  const std::vector<double> lo{0.0, 0.5, 1.0};
  const std::vector<double> hi{2.0, 2.5, 3.0};
  CHECK(ks_two_sample(lo, hi).d == doctest::Approx(1.0));

  CHECK_THROWS_AS(ks_two_sample({}, a), AnalysisError);
}

TEST_CASE("ks agrees with the brute-force oracle") {
  Rng rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nx = 2 + rng.next_below(200);
    const std::size_t ny = 2 + rng.next_below(200);
    std::vector<double> xs(nx), ys(ny);
    for (auto& v : xs) v = rng.next_double();
    const double shift = 0.2 * rng.next_double();
    for (auto& v : ys) v = rng.next_double() + shift;
    if (trial % 7 == 0) {
      // inject ties
      for (auto& v : ys) v = std::round(v * 10.0) / 10.0;
      for (auto& v : xs) v = std::round(v * 10.0) / 10.0;
    }
    const auto res = ks_two_sample(xs, ys);
    CHECK(std::abs(res.d - oracle::ks_d(xs, ys)) < 1e-12);
    const double ne = static_cast<double>(nx) * static_cast<double>(ny) /
                      static_cast<double>(nx + ny);
    CHECK(std::abs(res.p_value - oracle::ks_q(std::sqrt(ne) * res.d)) < 1e-6);
    // symmetry
    const auto rev = ks_two_sample(ys, xs);
    CHECK(rev.d == res.d);
  }
}

TEST_CASE("seeded 200-point ks fixture matches the sweep exactly") {
  Rng rng(8080);
  std::vector<double> xs(200), ys(200);
  for (auto& v : xs) v = rng.next_double();
  for (auto& v : ys) v = 0.15 + rng.next_double();
  const auto res = ks_two_sample(xs, ys);
  CHECK(std::abs(res.d - oracle::ks_d(xs, ys)) < 1e-12);
}

TEST_CASE("quartiles split 1..8 into pairs") {
  std::map<std::string, double> units;
  for (int i = 1; i <= 8; ++i) units["u" + std::to_string(i)] = i;
  const auto qa = quartile_assign(units);
  CHECK(qa.quartile.at("u1") == 0);
  CHECK(qa.quartile.at("u2") == 0);
  CHECK(qa.quartile.at("u3") == 1);
  CHECK(qa.quartile.at("u4") == 1);
  CHECK(qa.quartile.at("u5") == 2);
  CHECK(qa.quartile.at("u6") == 2);
  CHECK(qa.quartile.at("u7") == 3);
  CHECK(qa.quartile.at("u8") == 3);
}

TEST_CASE("quartile errors") {
  std::map<std::string, double> equal{{"a", 2}, {"b", 2}, {"c", 2}, {"d", 2}, {"e", 2}};
  CHECK_THROWS_AS(quartile_assign(equal), AnalysisError);
  std::map<std::string, double> few{{"a", 1}, {"b", 2}, {"c", 3}};
  CHECK_THROWS_AS(quartile_assign(few), AnalysisError);
}

TEST_CASE("lognormal quartiles hold 250 +- 1 units each") {
  Rng rng(1000);
  std::map<std::string, double> units;
  for (int i = 0; i < 1000; ++i) {
    units["tract" + std::to_string(i)] = std::exp(10.0 + 0.5 * rng.next_normal());
  }
  const auto qa = quartile_assign(units);
  // sort-based oracle: count values at or below each nearest-rank breakpoint
  std::vector<double> sorted;
  for (const auto& [k, v] : units) sorted.push_back(v);
  std::sort(sorted.begin(), sorted.end());
  CHECK(qa.breakpoints[0] == sorted[249]);
  CHECK(qa.breakpoints[1] == sorted[499]);
  CHECK(qa.breakpoints[2] == sorted[749]);
  for (const auto c : qa.counts) {
    CHECK(c >= 249);
    CHECK(c <= 251);
  }
}

TEST_CASE("label group comparison bootstraps per community") {
  Rng rng(14);
  std::vector<Occurrence> occs;
  auto lgbt = std::make_shared<Labels>(Labels{"sexuality:lgbt"});
  auto het = std::make_shared<Labels>(Labels{"sexuality:heterosexual"});
  for (int c = 0; c < 6; ++c) {
    const bool is_lgbt = c < 3;
    const double p = is_lgbt ? 0.45 : 0.15;
    for (int i = 0; i < 400; ++i) {
      auto o = occ(rng.next_double() < p ? "partner" : "wife", GenderClass::neutral);
      o.labels = is_lgbt ? lgbt : het;
      o.community = "comm" + std::to_string(c);
      occs.push_back(std::move(o));
    }
  }
  const auto groups = compare_label_groups(occs, "SigOther",
                                           RateTarget::variant("partner"), "sexuality",
                                           500, 3);
  REQUIRE(groups.size() == 2);
  const auto& h = groups[0];  // sorted: heterosexual < lgbt
  const auto& l = groups[1];
  CHECK(h.group == "sexuality:heterosexual");
  CHECK(l.group == "sexuality:lgbt");
  CHECK(h.n_communities == 3);
  CHECK(l.n_communities == 3);
  CHECK(l.mean > h.mean);
  CHECK(h.ci_low <= h.mean);
  CHECK(h.mean <= h.ci_high);
}

TEST_CASE("quartile group comparison stratifies units and runs ks") {
  Rng rng(15);
  std::vector<Occurrence> occs;
  for (int c = 0; c < 12; ++c) {
    const double income = 20000.0 + 2000.0 * c;
    const double p = 0.1 + 0.02 * c;  // higher-income units use the target more
    auto demo = std::make_shared<Demographics>(Demographics{{"income", income}});
    for (int i = 0; i < 300; ++i) {
      auto o = occ(rng.next_double() < p ? "partner" : "wife", GenderClass::neutral);
      o.community = "c" + std::to_string(c);
      o.demographics = demo;
      occs.push_back(std::move(o));
    }
  }
  const auto cmp = compare_quartile_groups(occs, "SigOther",
                                           RateTarget::variant("partner"), "income",
                                           500, 4);
  REQUIRE(cmp.groups.size() == 4);
  CHECK(cmp.groups[0].group == "Q1");
  CHECK(cmp.groups[3].group == "Q4");
  CHECK(cmp.groups[3].mean > cmp.groups[0].mean);
  CHECK(cmp.ks_top_vs_bottom.d > 0.5);
  CHECK(cmp.assignment.counts[0] == 3);
  CHECK(cmp.assignment.counts[3] == 3);
}
