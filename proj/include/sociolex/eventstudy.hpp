#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sociolex/variables.hpp"

namespace sociolex {

// state code -> treatment month (months since 1970-01).
class TreatmentTable {
 public:
  static TreatmentTable load_csv(const std::string& path);

  void add(const std::string& state, std::int32_t month);
  std::optional<std::int32_t> treatment_month(const std::string& state) const;
  const std::map<std::string, std::int32_t>& entries() const { return table_; }

 private:
  std::map<std::string, std::int32_t> table_;
};

struct PanelRow {
  std::string state;
  std::int32_t month = 0;      // calendar month index
  std::int32_t rel_month = 0;  // month - treatment_month(state)
  double y = 0.0;              // P(target | conditioning set) in this cell
  std::uint64_t n = 0;         // conditioning count in this cell
};

struct PanelOptions {
  std::string variable = "SigOther";
  // Empty = condition on every variant of the variable.
  std::vector<std::string> conditioning = {"partner", "spouse", "wife", "husband"};
  int window_pre = -12;
  int window_post = 12;
  std::uint64_t min_n = 20;
};

struct Panel {
  std::vector<PanelRow> rows;
  std::uint64_t dropped_cells = 0;  // below min_n
  std::string target;
};

Panel build_panel(std::span<const Occurrence> occs, const TreatmentTable& treatments,
                  const std::string& target, const PanelOptions& opts = {});

struct Design {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd row_weights;  // size 0 = unweighted
  std::vector<std::string> labels;
  std::vector<std::string> warnings;
  bool has_pre = false;
  bool has_post = false;
};

struct DesignOptions {
  bool weight_by_n = false;  // weight each cell by its occurrence count
};

// Columns: intercept; state dummies (first state by code order dropped);
// calendar-month dummies (earliest dropped); one indicator per relative
// month present in the panel, k = 0 omitted as the reference period.
// Relative-month columns are labeled pi_<k> (k < 0) and phi_<k> (k > 0).
Design build_design(const std::vector<PanelRow>& rows, const DesignOptions& opts = {});

struct Coefficient {
  std::string label;
  double estimate = 0.0;
  double se = 0.0;
};

struct RelMonthCoef {
  int rel_month = 0;
  double estimate = 0.0;
  double se = 0.0;
};

struct EventStudyResult {
  std::vector<Coefficient> coefficients;  // design column order
  double sigma2 = 0.0;                    // RSS / (rows - estimated columns)
  std::size_t rows = 0;
  std::size_t cols = 0;  // estimated columns (anchored column excluded)
  // Window-limited panels of treated states make calendar month, treatment
  // month, and relative month functionally dependent, so the saturated dummy
  // design always carries one extra collinearity. The fit resolves it by
  // anchoring the earliest relative-month coefficient at zero (a second
  // reference period); the anchored label is recorded here.
  std::string anchored_label;
  std::vector<std::string> warnings;

  const Coefficient* find(const std::string& label) const;
  // pi/phi coefficients sorted by relative month.
  std::vector<RelMonthCoef> relative_month_coefs() const;
  std::vector<Coefficient> state_effects() const;     // alpha_<state>
  std::vector<Coefficient> month_effects() const;     // lambda_<YYYY-MM>
};

// Ordinary least squares through a column-pivoted Householder QR; standard
// errors from sigma^2 * diag((X^T X)^-1). Throws AnalysisError on rank
// deficiency (naming the collinear columns) and when rows <= columns.
EventStudyResult fit_event_study(const Design& design);

void write_event_study_csv(const std::string& path, const EventStudyResult& r);

}  // namespace sociolex
