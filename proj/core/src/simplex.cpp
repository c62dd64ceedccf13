#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fairmdp/error.hpp"
#include "fairmdp/linear_program.hpp"

namespace fairmdp {
namespace {

constexpr double kFlush = 1e-14;

class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * (cols + 1), 0.0),
                                cost_row_(cols + 1, 0.0), basis_(rows, -1) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * (cols_ + 1) + j]; }
  double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * (cols_ + 1) + j]; }
  double& rhs(int i) { return at(i, cols_); }
  double rhs(int i) const { return at(i, cols_); }
  std::vector<double>& cost_row() { return cost_row_; }
  std::vector<int>& basis() { return basis_; }

  /// Reduced costs d_j = c_j - c_B' B^-1 A_j; the rhs slot holds -c_B' x_B.
  void price(const std::vector<double>& cost) {
    for (int j = 0; j <= cols_; ++j) cost_row_[j] = j < cols_ ? cost[j] : 0.0;
    for (int i = 0; i < rows_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &data_[static_cast<std::size_t>(i) * (cols_ + 1)];
      for (int j = 0; j <= cols_; ++j) cost_row_[j] -= cb * row[j];
    }
  }

  void pivot(int r, int q) {
    double* prow = &data_[static_cast<std::size_t>(r) * (cols_ + 1)];
    const double inv = 1.0 / prow[q];
    nonzeros_.clear();
    for (int j = 0; j <= cols_; ++j) {
      if (prow[j] == 0.0) continue;
      prow[j] *= inv;
      nonzeros_.push_back(j);
    }
    prow[q] = 1.0;
    auto eliminate = [&](double* row) {
      const double f = row[q];
      if (f == 0.0) return;
      for (int j : nonzeros_) {
        double v = row[j] - f * prow[j];
        if (std::abs(v) < kFlush && j != cols_) v = 0.0;
        row[j] = v;
      }
      row[q] = 0.0;
    };
    for (int i = 0; i < rows_; ++i)
      if (i != r) eliminate(&data_[static_cast<std::size_t>(i) * (cols_ + 1)]);
    eliminate(cost_row_.data());
    basis_[r] = q;
  }

 private:
  int rows_;
  int cols_;
  std::vector<double> data_;
  std::vector<double> cost_row_;
  std::vector<int> basis_;
  std::vector<int> nonzeros_;
};

enum class PhaseResult { kOptimal, kUnbounded };

struct PhaseStats {
  long iterations = 0;
  long bland_pivots = 0;
};

PhaseResult run_phase(Tableau& t, const std::vector<char>& enterable, const SimplexOptions& opt,
                      long& total_iterations, PhaseStats& stats) {
  const int m = t.rows();
  const int n = t.cols();
  auto& d = t.cost_row();
  auto& basis = t.basis();
  int degenerate_run = 0;
  bool bland = false;
  for (;;) {
    int q = -1;
    double best = opt.optimality_tol;
    for (int j = 0; j < n; ++j) {
      if (!enterable[j] || d[j] <= opt.optimality_tol) continue;
      if (bland) {
        q = j;
        break;
      }
      if (d[j] > best) {
        best = d[j];
        q = j;
      }
    }
    if (q < 0) return PhaseResult::kOptimal;

    double theta = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = t.at(i, q);
      if (a > opt.pivot_tol) theta = std::min(theta, std::max(t.rhs(i), 0.0) / a);
    }
    if (!std::isfinite(theta)) return PhaseResult::kUnbounded;
    const double slack = 1e-12 * (1.0 + theta);
    int r = -1;
    for (int i = 0; i < m; ++i) {
      const double a = t.at(i, q);
      if (a <= opt.pivot_tol || std::max(t.rhs(i), 0.0) / a > theta + slack) continue;
      if (r < 0) {
        r = i;
      } else if (bland ? basis[i] < basis[r] : a > t.at(r, q)) {
        r = i;
      }
    }

    if (theta <= 1e-12) {
      if (++degenerate_run >= opt.degenerate_switch) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }
    if (bland) ++stats.bland_pivots;
    t.pivot(r, q);
    for (int i = 0; i < m; ++i)
      if (t.rhs(i) < 0.0 && t.rhs(i) > -opt.feasibility_tol) t.rhs(i) = 0.0;
    ++stats.iterations;
    if (++total_iterations > opt.max_iterations)
      fail(ErrorCode::kNumericFailure, "simplex iteration limit reached");
  }
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opt) {
  lp.validate();
  const int m = lp.num_constraints();
  const int nv = lp.num_variables();

  std::vector<int> pos_col(nv), neg_col(nv, -1);
  std::vector<double> cost;
  int ncols = 0;
  for (int j = 0; j < nv; ++j) {
    pos_col[j] = ncols++;
    cost.push_back(lp.objective(j));
    if (lp.lower(j) == kFree) {
      neg_col[j] = ncols++;
      cost.push_back(-lp.objective(j));
    }
  }
  const int nstruct = ncols;

  std::vector<double> b(m);
  std::vector<double> sign(m, 1.0);
  std::vector<int> slack_col(m, -1), art_col(m, -1);
  double rhs_scale = 1.0;
  for (int i = 0; i < m; ++i) {
    const auto& row = lp.row(i);
    b[i] = row.rhs;
    for (const auto& term : row.terms)
      if (lp.lower(term.column) != kFree) b[i] -= term.value * lp.lower(term.column);
    if (b[i] < 0.0) sign[i] = -1.0;
    rhs_scale = std::max(rhs_scale, std::abs(row.rhs));
    if (row.sense == RowSense::kLessEqual) slack_col[i] = ncols++;
  }
  for (int i = 0; i < m; ++i)
    if (lp.row(i).sense == RowSense::kEqual || sign[i] < 0.0) art_col[i] = ncols++;
  cost.resize(ncols, 0.0);

  Tableau t(m, ncols);
  for (int i = 0; i < m; ++i) {
    for (const auto& term : lp.row(i).terms) {
      t.at(i, pos_col[term.column]) += sign[i] * term.value;
      if (neg_col[term.column] >= 0) t.at(i, neg_col[term.column]) -= sign[i] * term.value;
    }
    if (slack_col[i] >= 0) t.at(i, slack_col[i]) = sign[i];
    if (art_col[i] >= 0) t.at(i, art_col[i]) = 1.0;
    t.rhs(i) = sign[i] * b[i];
    t.basis()[i] = art_col[i] >= 0 ? art_col[i] : slack_col[i];
  }

  std::vector<char> is_art(ncols, 0);
  for (int i = 0; i < m; ++i)
    if (art_col[i] >= 0) is_art[art_col[i]] = 1;
  std::vector<char> enterable(ncols, 1);
  for (int j = 0; j < ncols; ++j)
    if (is_art[j]) enterable[j] = 0;

  LpSolution sol;
  long total = 0;
  PhaseStats p1, p2;

  if (std::any_of(art_col.begin(), art_col.end(), [](int c) { return c >= 0; })) {
    std::vector<double> phase_one_cost(ncols, 0.0);
    for (int j = 0; j < ncols; ++j)
      if (is_art[j]) phase_one_cost[j] = -1.0;
    t.price(phase_one_cost);
    if (run_phase(t, enterable, opt, total, p1) != PhaseResult::kOptimal)
      fail(ErrorCode::kNumericFailure, "phase one reported unbounded");
    const double infeasibility = t.cost_row()[ncols];
    if (infeasibility > opt.feasibility_tol * rhs_scale)
      fail(ErrorCode::kInfeasible, "LP infeasible (phase-one residual " + std::to_string(infeasibility) + ")");

    for (int r = 0; r < m; ++r) {
      if (!is_art[t.basis()[r]]) continue;
      int q = -1;
      double best = opt.pivot_tol;
      for (int j = 0; j < nstruct; ++j) {
        if (std::abs(t.at(r, j)) > best) {
          best = std::abs(t.at(r, j));
          q = j;
        }
      }
      for (int j = nstruct; j < ncols && q < 0; ++j)
        if (!is_art[j] && std::abs(t.at(r, j)) > opt.pivot_tol) q = j;
      if (q >= 0) {
        t.pivot(r, q);
      } else {
        for (int j = 0; j < ncols; ++j)
          if (!is_art[j]) t.at(r, j) = 0.0;
        t.rhs(r) = 0.0;
        ++sol.removed_redundant_rows;
      }
    }
  }

  t.price(cost);
  if (run_phase(t, enterable, opt, total, p2) == PhaseResult::kUnbounded)
    fail(ErrorCode::kUnbounded, "LP unbounded");

  std::vector<double> xs(ncols, 0.0);
  for (int i = 0; i < m; ++i) xs[t.basis()[i]] = std::max(t.rhs(i), 0.0);
  sol.x.assign(nv, 0.0);
  for (int j = 0; j < nv; ++j) {
    const double base = lp.lower(j) == kFree ? 0.0 : lp.lower(j);
    sol.x[j] = base + xs[pos_col[j]] - (neg_col[j] >= 0 ? xs[neg_col[j]] : 0.0);
  }
  sol.duals.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const int col = art_col[i] >= 0 ? art_col[i] : slack_col[i];
    sol.duals[i] = -t.cost_row()[col] * sign[i];
  }
  sol.iterations = total;
  sol.phase_one_iterations = p1.iterations;
  sol.bland_pivots = p1.bland_pivots + p2.bland_pivots;
  sol.objective = lp.objective_value(sol.x);

  // Certificate: primal residual, dual feasibility, and duality gap on the original LP.
  const auto activity = lp.row_activity(sol.x);
  for (int i = 0; i < m; ++i) {
    const auto& row = lp.row(i);
    const double r = row.sense == RowSense::kEqual ? std::abs(activity[i] - row.rhs)
                                                   : std::max(0.0, activity[i] - row.rhs);
    sol.max_primal_residual = std::max(sol.max_primal_residual, r);
    if (row.sense == RowSense::kLessEqual)
      sol.max_dual_infeasibility = std::max(sol.max_dual_infeasibility, -sol.duals[i]);
  }
  std::vector<double> reduced(nv);
  for (int j = 0; j < nv; ++j) reduced[j] = lp.objective(j);
  for (int i = 0; i < m; ++i)
    for (const auto& term : lp.row(i).terms) reduced[term.column] -= sol.duals[i] * term.value;
  sol.dual_objective = 0.0;
  for (int i = 0; i < m; ++i) sol.dual_objective += sol.duals[i] * lp.row(i).rhs;
  for (int j = 0; j < nv; ++j) {
    if (lp.lower(j) == kFree) {
      sol.max_dual_infeasibility = std::max(sol.max_dual_infeasibility, std::abs(reduced[j]));
    } else {
      sol.max_primal_residual = std::max(sol.max_primal_residual, lp.lower(j) - sol.x[j]);
      sol.max_dual_infeasibility = std::max(sol.max_dual_infeasibility, reduced[j]);
      sol.dual_objective += lp.lower(j) * reduced[j];
    }
  }
  const double scale = 1.0 + std::abs(sol.objective);
  const double gap = std::abs(sol.objective - sol.dual_objective);
  if (sol.max_primal_residual > opt.certify_tol * rhs_scale || sol.max_dual_infeasibility > opt.certify_tol * scale ||
      gap > opt.certify_tol * scale) {
    fail(ErrorCode::kNumericFailure,
         "optimality certificate failed: primal residual " + std::to_string(sol.max_primal_residual) +
             ", dual infeasibility " + std::to_string(sol.max_dual_infeasibility) + ", gap " + std::to_string(gap));
  }
  return sol;
}

}  // namespace fairmdp
