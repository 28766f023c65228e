#include "sociolex/eventstudy.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

#include "sociolex/csv.hpp"
#include "sociolex/error.hpp"
#include "sociolex/timebucket.hpp"

namespace sociolex {

TreatmentTable TreatmentTable::load_csv(const std::string& path) {
  const auto rows = csv::read_rows(path);
  if (rows.empty()) throw ValidationError(path + ": empty treatment table");
  std::size_t start = 0;
  if (rows[0].size() >= 2 && rows[0][0] == "state") start = 1;  // optional header
  TreatmentTable t;
  for (std::size_t i = start; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 2) {
      throw ValidationError(path + ": row " + std::to_string(i + 1) +
                            " must be state,year_month");
    }
    if (!is_us_state_or_dc(f[0])) {
      throw ValidationError(path + ": unknown state '" + f[0] + "'");
    }
    t.add(f[0], parse_year_month(f[1]));
  }
  return t;
}

void TreatmentTable::add(const std::string& state, std::int32_t month) {
  if (!table_.emplace(state, month).second) {
    throw ValidationError("state '" + state + "' appears twice in the treatment table");
  }
}

std::optional<std::int32_t> TreatmentTable::treatment_month(const std::string& state) const {
  auto it = table_.find(state);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

Panel build_panel(std::span<const Occurrence> occs, const TreatmentTable& treatments,
                  const std::string& target, const PanelOptions& opts) {
  if (!opts.conditioning.empty() &&
      std::find(opts.conditioning.begin(), opts.conditioning.end(), target) ==
          opts.conditioning.end()) {
    throw ValidationError("panel target '" + target +
                          "' is not in the conditioning set");
  }
  if (opts.window_pre > 0 || opts.window_post < 0 || opts.window_pre > opts.window_post) {
    throw ValidationError("bad event window");
  }
  struct Cell {
    std::uint64_t k = 0, n = 0;
  };
  std::map<std::pair<std::string, std::int32_t>, Cell> cells;
  bool any_treated_state = false;
  for (const auto& o : occs) {
    if (o.variable != opts.variable || !o.state) continue;
    const auto treat = treatments.treatment_month(*o.state);
    if (!treat) continue;  // never-treated states are excluded entirely
    any_treated_state = true;
    if (!opts.conditioning.empty() &&
        std::find(opts.conditioning.begin(), opts.conditioning.end(), o.variant) ==
            opts.conditioning.end()) {
      continue;
    }
    const std::int32_t k = o.month - *treat;
    if (k < opts.window_pre || k > opts.window_post) continue;
    auto& c = cells[{*o.state, o.month}];
    ++c.n;
    if (o.variant == target) ++c.k;
  }
  if (!any_treated_state) {
    throw AnalysisError("no occurrences fall in a treated state");
  }
  Panel panel;
  panel.target = target;
  for (const auto& [key, cell] : cells) {
    if (cell.n < opts.min_n) {
      ++panel.dropped_cells;
      continue;
    }
    PanelRow row;
    row.state = key.first;
    row.month = key.second;
    row.rel_month = key.second - *treatments.treatment_month(key.first);
    row.y = static_cast<double>(cell.k) / static_cast<double>(cell.n);
    row.n = cell.n;
    panel.rows.push_back(std::move(row));
  }
  if (panel.rows.empty()) {
    throw AnalysisError("every state-month cell is below min_n=" +
                        std::to_string(opts.min_n));
  }
  return panel;
}

Design build_design(const std::vector<PanelRow>& rows, const DesignOptions& opts) {
  if (rows.empty()) throw ValidationError("empty panel");
  std::set<std::string> state_set;
  std::set<std::int32_t> month_set;
  std::set<std::int32_t> rel_set;
  for (const auto& r : rows) {
    state_set.insert(r.state);
    month_set.insert(r.month);
    if (r.rel_month != 0) rel_set.insert(r.rel_month);
  }
  if (rel_set.empty()) {
    throw AnalysisError("panel has no rows away from the treatment month");
  }

  // Reference levels: first state by code order, earliest calendar month.
  std::vector<std::string> states(state_set.begin(), state_set.end());
  std::vector<std::int32_t> months(month_set.begin(), month_set.end());
  std::vector<std::int32_t> rels(rel_set.begin(), rel_set.end());

  Design d;
  d.labels.push_back("intercept");
  std::map<std::string, int> state_col;
  for (std::size_t i = 1; i < states.size(); ++i) {
    state_col[states[i]] = static_cast<int>(d.labels.size());
    d.labels.push_back("alpha_" + states[i]);
  }
  std::map<std::int32_t, int> month_col;
  for (std::size_t i = 1; i < months.size(); ++i) {
    month_col[months[i]] = static_cast<int>(d.labels.size());
    d.labels.push_back("lambda_" + month_label(months[i]));
  }
  std::map<std::int32_t, int> rel_col;
  for (const auto k : rels) {
    rel_col[k] = static_cast<int>(d.labels.size());
    if (k < 0) {
      d.labels.push_back("pi_" + std::to_string(k));
      d.has_pre = true;
    } else {
      d.labels.push_back("phi_" + std::to_string(k));
      d.has_post = true;
    }
  }
  if (!d.has_pre) d.warnings.push_back("panel has no pre-treatment rows; no pi columns");
  if (!d.has_post) d.warnings.push_back("panel has no post-treatment rows; no phi columns");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(d.labels.size());
  d.X = Eigen::MatrixXd::Zero(n, p);
  d.y = Eigen::VectorXd(n);
  if (opts.weight_by_n) d.row_weights = Eigen::VectorXd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    d.X(i, 0) = 1.0;
    if (auto it = state_col.find(r.state); it != state_col.end()) d.X(i, it->second) = 1.0;
    if (auto it = month_col.find(r.month); it != month_col.end()) d.X(i, it->second) = 1.0;
    if (r.rel_month != 0) d.X(i, rel_col.at(r.rel_month)) = 1.0;
    d.y(i) = r.y;
    if (opts.weight_by_n) d.row_weights(i) = static_cast<double>(r.n);
  }
  return d;
}

namespace {

// Relative-month value of a pi_/phi_ label, or nullopt for other columns.
std::optional<int> rel_month_of(const std::string& label) {
  if (label.rfind("pi_", 0) == 0) return std::stoi(label.substr(3));
  if (label.rfind("phi_", 0) == 0) return std::stoi(label.substr(4));
  return std::nullopt;
}

}  // namespace

EventStudyResult fit_event_study(const Design& design) {
  Eigen::MatrixXd X = design.X;
  Eigen::VectorXd y = design.y;
  const auto n = X.rows();
  if (design.row_weights.size() == n) {
    const Eigen::VectorXd w = design.row_weights.array().sqrt();
    X = w.asDiagonal() * X;
    y = w.asDiagonal() * y;
  }

  std::vector<std::string> labels = design.labels;
  EventStudyResult res;
  res.warnings = design.warnings;

  auto rank_of = [](const Eigen::MatrixXd& M) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
    return qr.rank();
  };

  // The saturated relative-month design of a window-limited, all-treated
  // panel is rank deficient by construction (calendar month = treatment
  // month + relative month). Anchor the earliest relative-month coefficient
  // at zero as the second reference and estimate the rest.
  if (rank_of(X) < X.cols()) {
    int anchor = -1;
    int best_k = std::numeric_limits<int>::max();
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (const auto k = rel_month_of(labels[j]); k && *k < best_k) {
        best_k = *k;
        anchor = static_cast<int>(j);
      }
    }
    if (anchor >= 0) {
      res.anchored_label = labels[static_cast<std::size_t>(anchor)];
      res.warnings.push_back("anchored " + res.anchored_label +
                             " at zero as the second reference period");
      const auto keep = X.cols() - 1;
      Eigen::MatrixXd X2(X.rows(), keep);
      X2.leftCols(anchor) = X.leftCols(anchor);
      X2.rightCols(keep - anchor) = X.rightCols(keep - anchor);
      X = std::move(X2);
      labels.erase(labels.begin() + anchor);
    }
  }

  const auto p = X.cols();
  if (n <= p) {
    throw AnalysisError("event-study fit needs more rows (" + std::to_string(n) +
                        ") than columns (" + std::to_string(p) + ")");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) {
    const auto& perm = qr.colsPermutation().indices();
    std::string names;
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      if (!names.empty()) names += ", ";
      names += labels[static_cast<std::size_t>(perm(k))];
    }
    throw AnalysisError("design is rank deficient; collinear columns: " + names);
  }

  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * beta;
  const double rss = resid.squaredNorm();
  const double sigma2 = rss / static_cast<double>(n - p);

  // diag((X^T X)^-1)_j = ||R^-T P^T e_j||^2 with X P = Q R.
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  Eigen::MatrixXd Pt = qr.colsPermutation().transpose() * Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd W = R.transpose().triangularView<Eigen::Lower>().solve(Pt);
  const Eigen::VectorXd xtx_inv_diag = W.colwise().squaredNorm();

  res.rows = static_cast<std::size_t>(n);
  res.cols = static_cast<std::size_t>(p);
  res.sigma2 = sigma2;
  res.coefficients.reserve(design.labels.size());
  Eigen::Index fitted = 0;
  for (const auto& label : design.labels) {
    if (label == res.anchored_label) {
      res.coefficients.push_back(Coefficient{label, 0.0, 0.0});
      continue;
    }
    res.coefficients.push_back(
        Coefficient{label, beta(fitted), std::sqrt(sigma2 * xtx_inv_diag(fitted))});
    ++fitted;
  }
  return res;
}

const Coefficient* EventStudyResult::find(const std::string& label) const {
  for (const auto& c : coefficients) {
    if (c.label == label) return &c;
  }
  return nullptr;
}

std::vector<RelMonthCoef> EventStudyResult::relative_month_coefs() const {
  std::vector<RelMonthCoef> out;
  for (const auto& c : coefficients) {
    int k = 0;
    if (c.label.rfind("pi_", 0) == 0) k = std::stoi(c.label.substr(3));
    else if (c.label.rfind("phi_", 0) == 0) k = std::stoi(c.label.substr(4));
    else continue;
    out.push_back(RelMonthCoef{k, c.estimate, c.se});
  }
  std::sort(out.begin(), out.end(),
            [](const RelMonthCoef& a, const RelMonthCoef& b) { return a.rel_month < b.rel_month; });
  return out;
}

std::vector<Coefficient> EventStudyResult::state_effects() const {
  std::vector<Coefficient> out;
  for (const auto& c : coefficients) {
    if (c.label.rfind("alpha_", 0) == 0) out.push_back(c);
  }
  return out;
}

std::vector<Coefficient> EventStudyResult::month_effects() const {
  std::vector<Coefficient> out;
  for (const auto& c : coefficients) {
    if (c.label.rfind("lambda_", 0) == 0) out.push_back(c);
  }
  return out;
}

void write_event_study_csv(const std::string& path, const EventStudyResult& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write event-study CSV: " + path);
  out << "coef,estimate,se\n";
  for (const auto& c : r.coefficients) {
    csv::write_row(out, {c.label, csv::fmt(c.estimate), csv::fmt(c.se)});
  }
  if (!out) throw AnalysisError("write failed: " + path);
}

}  // namespace sociolex
