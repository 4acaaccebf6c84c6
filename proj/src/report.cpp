#include "juntakit/report.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace juntakit {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void Report::add(CheckReport row) { rows_.push_back(std::move(row)); }

void Report::append(const Report& other) {
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

std::size_t Report::failures() const {
  std::size_t n = 0;
  for (const auto& r : rows_)
    if (!r.pass) ++n;
  return n;
}

std::string Report::csv() const {
  std::ostringstream os;
  os << "check,left,right,slack,pass\n";
  for (const auto& r : rows_)
    os << r.name << ',' << format_number(r.lhs) << ',' << format_number(r.rhs) << ','
       << format_number(r.slack) << ',' << (r.pass ? "true" : "false") << '\n';
  return os.str();
}

std::string Report::summary() const {
  std::ostringstream os;
  os << "checks=" << rows_.size() << " passed=" << rows_.size() - failures() << " failed=" << failures();
  if (!rows_.empty()) {
    const CheckReport* worst = &rows_.front();
    for (const auto& r : rows_)
      if (r.slack < worst->slack) worst = &r;
    os << " worst=" << worst->name << ':' << format_number(worst->slack);
  }
  return os.str();
}

}  // namespace juntakit
