#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "fairmdp/linear_program.hpp"

namespace fairmdp {
namespace {

std::string short_name(char prefix, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%07d", prefix, index);
  return buf;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Fixed MPS field columns: 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
void entry(std::ostream& out, const std::string& code, const std::string& f1, const std::string& f2,
           const std::string& v) {
  char buf[80];
  std::snprintf(buf, sizeof buf, " %-2s %-8s  %-8s  %12s", code.c_str(), f1.c_str(), f2.c_str(), v.c_str());
  out << buf << '\n';
}

}  // namespace

void write_mps(std::ostream& out, const LinearProgram& lp, const std::string& name) {
  out << "NAME          " << name << '\n';
  out << "OBJSENSE\n    MAX\n";
  out << "ROWS\n";
  out << " N  OBJ\n";
  for (int i = 0; i < lp.num_constraints(); ++i)
    out << ' ' << (lp.row(i).sense == RowSense::kEqual ? 'E' : 'L') << "  " << short_name('R', i) << '\n';

  std::vector<std::vector<LpTerm>> by_column(lp.num_variables());
  for (int i = 0; i < lp.num_constraints(); ++i)
    for (const auto& t : lp.row(i).terms) by_column[t.column].push_back({i, t.value});

  out << "COLUMNS\n";
  for (int j = 0; j < lp.num_variables(); ++j) {
    const auto col = short_name('X', j);
    if (lp.objective(j) != 0.0) entry(out, "", col, "OBJ", number(lp.objective(j)));
    for (const auto& t : by_column[j])
      if (t.value != 0.0) entry(out, "", col, short_name('R', t.column), number(t.value));
  }
  out << "RHS\n";
  for (int i = 0; i < lp.num_constraints(); ++i)
    if (lp.row(i).rhs != 0.0) entry(out, "", "RHS", short_name('R', i), number(lp.row(i).rhs));
  out << "BOUNDS\n";
  for (int j = 0; j < lp.num_variables(); ++j) {
    if (lp.lower(j) == kFree)
      entry(out, "FR", "BND", short_name('X', j), "");
    else if (lp.lower(j) != 0.0)
      entry(out, "LO", "BND", short_name('X', j), number(lp.lower(j)));
  }
  out << "ENDATA\n";
}

}  // namespace fairmdp
