#include "fairmdp/linear_program.hpp"

#include <cmath>

#include "fairmdp/error.hpp"

namespace fairmdp {

int LinearProgram::add_variable(std::string name, double objective, double lower) {
  objective_.push_back(objective);
  lower_.push_back(lower);
  names_.push_back(std::move(name));
  return num_variables() - 1;
}

int LinearProgram::add_row(std::string name, RowSense sense, double rhs, std::vector<LpTerm> terms) {
  rows_.push_back({std::move(name), sense, rhs, std::move(terms)});
  return num_constraints() - 1;
}

int LinearProgram::num_equalities() const noexcept {
  int count = 0;
  for (const auto& r : rows_) count += r.sense == RowSense::kEqual;
  return count;
}

void LinearProgram::validate() const {
  for (int j = 0; j < num_variables(); ++j) {
    require(std::isfinite(objective_[j]), ErrorCode::kInvalidModel, "non-finite objective coefficient");
    require(lower_[j] == kFree || std::isfinite(lower_[j]), ErrorCode::kInvalidModel, "bad lower bound");
  }
  for (const auto& r : rows_) {
    require(std::isfinite(r.rhs), ErrorCode::kInvalidModel, "non-finite rhs in row " + r.name);
    for (const auto& t : r.terms) {
      require(t.column >= 0 && t.column < num_variables(), ErrorCode::kInvalidModel,
              "column out of range in row " + r.name);
      require(std::isfinite(t.value), ErrorCode::kInvalidModel, "non-finite coefficient in row " + r.name);
    }
  }
}

std::vector<double> LinearProgram::row_activity(std::span<const double> x) const {
  std::vector<double> out(rows_.size(), 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (const auto& t : rows_[i].terms) out[i] += t.value * x[t.column];
  return out;
}

double LinearProgram::objective_value(std::span<const double> x) const {
  double total = 0.0;
  for (int j = 0; j < num_variables(); ++j) total += objective_[j] * x[j];
  return total;
}

}  // namespace fairmdp
