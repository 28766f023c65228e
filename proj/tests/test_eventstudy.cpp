#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sociolex/error.hpp"
#include "sociolex/eventstudy.hpp"
#include "synth.hpp"

using namespace sociolex;

namespace {

Occurrence spousal(const std::string& state, std::int32_t month, const std::string& variant) {
  Occurrence o;
  o.message_id = "m";
  o.variable = "SigOther";
  o.variant = variant;
  o.gender = GenderClass::neutral;
  o.precursor = "my";
  o.perspective = Perspective::first;
  o.month = month;
  o.state = state;
  return o;
}

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& X) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = X(i, j);
    }
  }
  return rows;
}

}  // namespace

TEST_CASE("treatment table parses the shipped format") {
  const auto t = TreatmentTable::load_csv(testutil::data_file("mea_treatments.csv"));
  CHECK(t.entries().size() == 36);
  REQUIRE(t.treatment_month("MA"));
  CHECK(*t.treatment_month("MA") == (2004 - 1970) * 12 + 4);  // 2004-05
  REQUIRE(t.treatment_month("FL"));
  CHECK(*t.treatment_month("FL") == (2015 - 1970) * 12 + 0);
  CHECK_FALSE(t.treatment_month("TX"));

  testutil::TempDir tmp("es");
  const auto bad = tmp.file("dup.csv");
  testutil::write_file(bad, "state,year_month\nMA,2004-05\nMA,2005-01\n");
  CHECK_THROWS_WITH_AS(TreatmentTable::load_csv(bad), doctest::Contains("twice"),
                       ValidationError);
}

TEST_CASE("build_panel windows and conditions cells") {
  TreatmentTable t;
  const std::int32_t treat = (2013 - 1970) * 12 + 5;
  t.add("MA", treat);
  std::vector<Occurrence> occs;
  for (std::int32_t k = -14; k <= 14; ++k) {
    for (int i = 0; i < 25; ++i) {
      occs.push_back(spousal("MA", treat + k, i < 10 ? "partner" : "wife"));
    }
    // noise from a non-conditioning variant never enters the cell counts
    occs.push_back(spousal("MA", treat + k, "babe"));
  }
  PanelOptions opts;
  opts.min_n = 20;
  const auto panel = build_panel(occs, t, "partner", opts);
  CHECK(panel.rows.size() == 25);  // k in [-12, 12]
  for (const auto& row : panel.rows) {
    CHECK(row.rel_month >= -12);
    CHECK(row.rel_month <= 12);
    CHECK(row.n == 25);
    CHECK(row.y == doctest::Approx(10.0 / 25.0));
  }
  const auto ks = [&] {
    std::set<std::int32_t> s;
    for (const auto& r : panel.rows) s.insert(r.rel_month);
    return s;
  }();
  CHECK(ks.size() == 25);
  CHECK(*ks.begin() == -12);
  CHECK(*ks.rbegin() == 12);
}

TEST_CASE("panel errors") {
  TreatmentTable t;
  t.add("MA", 520);
  std::vector<Occurrence> occs{spousal("NY", 520, "partner")};
  CHECK_THROWS_WITH_AS(build_panel(occs, t, "partner", {}),
                       doctest::Contains("treated"), AnalysisError);

  std::vector<Occurrence> thin{spousal("MA", 520, "partner")};
  CHECK_THROWS_WITH_AS(build_panel(thin, t, "partner", {}), doctest::Contains("min_n"),
                       AnalysisError);

  CHECK_THROWS_AS(build_panel(occs, t, "babe", {}), ValidationError);
}

TEST_CASE("synthetic staggered panel matches nested-loop enumeration") {
  Rng rng(10);
  TreatmentTable t;
  std::vector<Occurrence> occs;
  const std::int32_t base = (2012 - 1970) * 12;
  std::vector<std::pair<std::string, std::int32_t>> states;
  for (int s = 0; s < 30; ++s) {
    std::string code = "S";
    code.push_back(static_cast<char>('A' + s % 26));
    if (s >= 26) code += "X";
    // synthetic codes are not state codes; use real ones instead
    states.clear();
    break;
  }
  const char* real_states[30] = {"AL","AK","AZ","AR","CA","CO","CT","DE","FL","GA",
                                 "HI","ID","IL","IN","IA","KS","KY","LA","ME","MD",
                                 "MA","MI","MN","MS","MO","MT","NE","NV","NH","NJ"};
  for (int s = 0; s < 30; ++s) {
    const std::int32_t treat = base + 6 + static_cast<std::int32_t>(rng.next_below(16));
    t.add(real_states[s], treat);
    states.emplace_back(real_states[s], treat);
  }
  // data coverage: months base..base+40, variable cell sizes
  std::uint64_t expected_rows = 0;
  for (const auto& [code, treat] : states) {
    for (std::int32_t m = base; m <= base + 40; ++m) {
      const std::int32_t k = m - treat;
      const int n = 10 + static_cast<int>(rng.next_below(30));
      for (int i = 0; i < n; ++i) {
        occs.push_back(spousal(code, m, rng.next_double() < 0.3 ? "partner" : "husband"));
      }
      if (k >= -12 && k <= 12 && n >= 20) ++expected_rows;  // independent cell count
    }
  }
  PanelOptions opts;
  opts.min_n = 20;
  const auto panel = build_panel(occs, t, "partner", opts);
  CHECK(panel.rows.size() == expected_rows);
}

TEST_CASE("design columns follow the construction rule") {
  // two states, same treatment month, full 25-month windows: 50 columns
  std::vector<PanelRow> rows;
  const std::int32_t treat = 520;
  for (const char* st : {"CA", "NY"}) {
    for (std::int32_t k = -12; k <= 12; ++k) {
      PanelRow r;
      r.state = st;
      r.month = treat + k;
      r.rel_month = k;
      r.y = 0.3;
      r.n = 30;
      rows.push_back(r);
    }
  }
  const auto d = build_design(rows);
  CHECK(d.labels.size() == 1 + 1 + 24 + 24);
  CHECK(d.X.cols() == 50);
  CHECK(d.X.rows() == 50);
  CHECK(d.labels[0] == "intercept");
  CHECK(d.labels[1] == "alpha_NY");  // CA dropped as reference
  CHECK(std::count_if(d.labels.begin(), d.labels.end(), [](const std::string& l) {
          return l.rfind("lambda_", 0) == 0;
        }) == 24);
  CHECK(std::count_if(d.labels.begin(), d.labels.end(), [](const std::string& l) {
          return l.rfind("pi_", 0) == 0;
        }) == 12);
  CHECK(std::count_if(d.labels.begin(), d.labels.end(), [](const std::string& l) {
          return l.rfind("phi_", 0) == 0;
        }) == 12);
  CHECK(d.has_pre);
  CHECK(d.has_post);
}

TEST_CASE("design flags missing pre-period and absorbs single state") {
  std::vector<PanelRow> rows;
  for (std::int32_t k = 0; k <= 12; ++k) {
    PanelRow r;
    r.state = "MA";
    r.month = 520 + k;
    r.rel_month = k;
    r.y = 0.2;
    r.n = 30;
    rows.push_back(r);
  }
  const auto d = build_design(rows);
  CHECK_FALSE(d.has_pre);
  REQUIRE(!d.warnings.empty());
  CHECK(d.warnings[0].find("pre") != std::string::npos);
  // single state: no alpha block after the reference drop
  CHECK(std::count_if(d.labels.begin(), d.labels.end(), [](const std::string& l) {
          return l.rfind("alpha_", 0) == 0;
        }) == 0);
}

TEST_CASE("exact single-column response is recovered") {
  const auto fx = synth::staggered_panel(6, 0.0, 0.0, 31);
  auto d = build_design(fx.rows);
  // y = 0.05 * phi_3 column exactly
  int phi3 = -1;
  for (std::size_t j = 0; j < d.labels.size(); ++j) {
    if (d.labels[j] == "phi_3") phi3 = static_cast<int>(j);
  }
  REQUIRE(phi3 >= 0);
  d.y = 0.05 * d.X.col(phi3);
  const auto fit = fit_event_study(d);
  for (std::size_t j = 0; j < d.labels.size(); ++j) {
    const double expected = static_cast<int>(j) == phi3 ? 0.05 : 0.0;
    CHECK(std::abs(fit.coefficients[j].estimate - expected) < 1e-10);
  }
  CHECK(fit.sigma2 < 1e-20);
}

TEST_CASE("planted staggered effect is recovered within three standard errors") {
  const auto fx = synth::staggered_panel(30, 0.02, 0.001, 77);
  const auto d = build_design(fx.rows);
  const auto fit = fit_event_study(d);
  int checked_pre = 0, checked_post = 0;
  for (const auto& c : fit.relative_month_coefs()) {
    if (c.rel_month < 0) {
      CHECK(std::abs(c.estimate - 0.0) <= 3.0 * c.se);
      ++checked_pre;
    } else {
      CHECK(std::abs(c.estimate - fx.effect) <= 3.0 * c.se);
      ++checked_post;
    }
  }
  CHECK(checked_pre == 12);
  CHECK(checked_post == 12);
}

TEST_CASE("qr solution matches the independent normal-equations solver") {
  const auto fx = synth::staggered_panel(10, 0.015, 0.002, 5150);
  const auto d = build_design(fx.rows);
  const auto fit = fit_event_study(d);

  std::vector<double> y(fx.rows.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = d.y(static_cast<Eigen::Index>(i));
  const auto ref = oracle::normal_equations(to_rows(d.X), y);
  REQUIRE(ref.beta.size() == fit.coefficients.size());
  const double dof = static_cast<double>(fit.rows - fit.cols);
  double rss = 0.0;
  {
    Eigen::VectorXd beta(static_cast<Eigen::Index>(ref.beta.size()));
    for (std::size_t j = 0; j < ref.beta.size(); ++j) beta(static_cast<Eigen::Index>(j)) = ref.beta[j];
    rss = (d.y - d.X * beta).squaredNorm();
  }
  const double sigma2_ref = rss / dof;
  for (std::size_t j = 0; j < ref.beta.size(); ++j) {
    CHECK(std::abs(fit.coefficients[j].estimate - ref.beta[j]) < 1e-8);
    const double se_ref = std::sqrt(sigma2_ref * ref.xtx_inv_diag[j]);
    CHECK(std::abs(fit.coefficients[j].se - se_ref) < 1e-8);
  }
}

TEST_CASE("residuals are orthogonal to the design") {
  const auto fx = synth::staggered_panel(12, 0.01, 0.003, 999);
  const auto d = build_design(fx.rows);
  const auto fit = fit_event_study(d);
  Eigen::VectorXd beta(static_cast<Eigen::Index>(fit.coefficients.size()));
  for (std::size_t j = 0; j < fit.coefficients.size(); ++j) {
    beta(static_cast<Eigen::Index>(j)) = fit.coefficients[j].estimate;
  }
  const Eigen::VectorXd resid = d.y - d.X * beta;
  const double rel = (d.X.transpose() * resid).norm() / std::max(1.0, d.y.norm());
  CHECK(rel < 1e-8);
}

TEST_CASE("adding a constant shifts only the intercept") {
  const auto fx = synth::staggered_panel(8, 0.02, 0.002, 404);
  auto d = build_design(fx.rows);
  const auto fit1 = fit_event_study(d);
  d.y.array() += 0.37;
  const auto fit2 = fit_event_study(d);
  for (std::size_t j = 0; j < fit1.coefficients.size(); ++j) {
    const auto& label = fit1.coefficients[j].label;
    const double delta = fit2.coefficients[j].estimate - fit1.coefficients[j].estimate;
    if (label == "intercept") {
      CHECK(std::abs(delta - 0.37) < 1e-10);
    } else {
      CHECK(std::abs(delta) < 1e-10);
    }
  }
}

TEST_CASE("row permutations leave coefficients unchanged") {
  const auto fx = synth::staggered_panel(9, 0.02, 0.002, 123);
  auto rows = fx.rows;
  const auto fit1 = fit_event_study(build_design(rows));
  Rng rng(5);
  for (std::size_t i = rows.size(); i > 1; --i) {
    std::swap(rows[i - 1], rows[rng.next_below(i)]);
  }
  const auto fit2 = fit_event_study(build_design(rows));
  REQUIRE(fit1.coefficients.size() == fit2.coefficients.size());
  for (std::size_t j = 0; j < fit1.coefficients.size(); ++j) {
    CHECK(fit1.coefficients[j].label == fit2.coefficients[j].label);
    CHECK(std::abs(fit1.coefficients[j].estimate - fit2.coefficients[j].estimate) < 1e-12);
  }
}

TEST_CASE("null pre-trends reject at most ten percent") {
  int significant = 0, total = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto fx = synth::staggered_panel(12, 0.02, 0.002,
                                           9000 + static_cast<std::uint64_t>(rep));
    const auto fit = fit_event_study(build_design(fx.rows));
    for (const auto& c : fit.relative_month_coefs()) {
      if (c.rel_month < 0) {
        ++total;
        if (std::abs(c.estimate) > 1.96 * c.se) ++significant;
      }
    }
  }
  REQUIRE(total == 1200);
  CHECK(static_cast<double>(significant) / static_cast<double>(total) <= 0.10);
}

TEST_CASE("rank deficiency is reported with column names") {
  // one state: relative month and calendar month are perfectly collinear
  std::vector<PanelRow> rows;
  for (std::int32_t k = -12; k <= 12; ++k) {
    PanelRow r;
    r.state = "MA";
    r.month = 520 + k;
    r.rel_month = k;
    r.y = 0.2 + 0.001 * k;
    r.n = 30;
    rows.push_back(r);
  }
  // duplicate rows so rows > cols and the failure is rank, not shape
  auto twice = rows;
  twice.insert(twice.end(), rows.begin(), rows.end());
  const auto d = build_design(twice);
  CHECK_THROWS_WITH_AS(fit_event_study(d), doctest::Contains("collinear"), AnalysisError);
}

TEST_CASE("weighted fit differs from unweighted when cells are unbalanced") {
  auto fx = synth::staggered_panel(8, 0.02, 0.004, 2121);
  Rng rng(88);
  for (auto& r : fx.rows) r.n = 20 + rng.next_below(400);
  const auto unweighted = fit_event_study(build_design(fx.rows));
  DesignOptions w;
  w.weight_by_n = true;
  const auto weighted = fit_event_study(build_design(fx.rows, w));
  bool any_differ = false;
  for (std::size_t j = 0; j < unweighted.coefficients.size(); ++j) {
    if (std::abs(unweighted.coefficients[j].estimate - weighted.coefficients[j].estimate) >
        1e-9) {
      any_differ = true;
    }
  }
  CHECK(any_differ);
}

TEST_CASE("event study csv has the pinned header") {
  testutil::TempDir tmp("es");
  const auto fx = synth::staggered_panel(6, 0.02, 0.002, 31337);
  const auto fit = fit_event_study(build_design(fx.rows));
  const auto path = tmp.file("coef.csv");
  write_event_study_csv(path, fit);
  const auto content = testutil::slurp(path);
  CHECK(content.rfind("coef,estimate,se\n", 0) == 0);
  CHECK(content.find("phi_12,") != std::string::npos);
  CHECK(content.find("pi_-12,") != std::string::npos);
}
