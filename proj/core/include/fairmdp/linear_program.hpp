#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fairmdp {

inline constexpr double kFree = -std::numeric_limits<double>::infinity();

enum class RowSense { kLessEqual, kEqual };

struct LpTerm {
  int column;
  double value;
};

struct LpRow {
  std::string name;
  RowSense sense;
  double rhs;
  std::vector<LpTerm> terms;
};

/// maximize c'x  s.t.  rows (<= or =),  x_j >= lower_j  (lower_j may be kFree).
/// Rows are kept in insertion order so builders control the constraint layout.
class LinearProgram {
 public:
  int add_variable(std::string name, double objective, double lower = 0.0);
  int add_row(std::string name, RowSense sense, double rhs, std::vector<LpTerm> terms);

  int num_variables() const noexcept { return static_cast<int>(objective_.size()); }
  int num_constraints() const noexcept { return static_cast<int>(rows_.size()); }
  int num_equalities() const noexcept;

  double objective(int j) const { return objective_[j]; }
  double lower(int j) const { return lower_[j]; }
  const std::string& variable_name(int j) const { return names_[j]; }
  const LpRow& row(int i) const { return rows_[i]; }
  std::span<const LpRow> rows() const noexcept { return rows_; }

  /// Throws InvalidModel on non-finite data or out-of-range columns.
  void validate() const;

  /// Activity of each row at x.
  std::vector<double> row_activity(std::span<const double> x) const;
  double objective_value(std::span<const double> x) const;

 private:
  std::vector<double> objective_;
  std::vector<double> lower_;
  std::vector<std::string> names_;
  std::vector<LpRow> rows_;
};

struct SimplexOptions {
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-8;
  double pivot_tol = 1e-9;
  /// Tolerance for the post-solve primal residual / duality-gap certificate, relative
  /// to 1 + |objective|.
  double certify_tol = 1e-6;
  /// Consecutive degenerate pivots before pricing falls back to Bland's rule.
  int degenerate_switch = 50;
  long max_iterations = 5'000'000;
};

struct LpSolution {
  std::vector<double> x;
  /// One multiplier per row; >= 0 on <= rows at optimality.
  std::vector<double> duals;
  double objective = 0.0;
  double dual_objective = 0.0;
  double max_primal_residual = 0.0;
  double max_dual_infeasibility = 0.0;
  long iterations = 0;
  long phase_one_iterations = 0;
  long bland_pivots = 0;
  int removed_redundant_rows = 0;
};

/// Two-phase dense tableau simplex. Phase one uses artificial variables; pricing is
/// Dantzig's rule with Bland's rule engaged after a run of degenerate pivots.
/// Throws Infeasible, Unbounded, or NumericFailure (including a failed certificate).
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

/// Fixed-format MPS with 8-character generated names (R#######, X#######) and an
/// OBJSENSE MAX section.
void write_mps(std::ostream& out, const LinearProgram& lp, const std::string& name = "FAIRMDP");

}  // namespace fairmdp
