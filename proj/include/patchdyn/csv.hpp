#pragma once

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace patchdyn {

/// 12 significant digits, '.' separator, no locale dependence.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0) return "0";  // folds -0 into 0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// Minimal CSV emitter with '\n' line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(std::initializer_list<std::string_view> cols) {
    bool first = true;
    for (auto c : cols) {
      if (!first) os_ << ',';
      os_ << c;
      first = false;
    }
    os_ << '\n';
  }

  CsvWriter& field(double x) { return raw(format_number(x)); }
  CsvWriter& field(std::string_view s) { return raw(s); }
  CsvWriter& field(const char* s) { return raw(s); }
  CsvWriter& field(int x) { return raw(std::to_string(x)); }
  CsvWriter& field(bool b) { return raw(b ? "1" : "0"); }

  void end_row() {
    os_ << '\n';
    first_ = true;
  }

 private:
  CsvWriter& raw(std::string_view s) {
    if (!first_) os_ << ',';
    os_ << s;
    first_ = false;
    return *this;
  }

  std::ostream& os_;
  bool first_ = true;
};

}  // namespace patchdyn
