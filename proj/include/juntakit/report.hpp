#pragma once

// Delimited-text reports of inequality checks.

#include <cstddef>
#include <string>
#include <vector>

#include "juntakit/junta.hpp"

namespace juntakit {

/// Shortest round-trip decimal for finite values; "inf", "-inf", "nan" otherwise.
std::string format_number(double v);

class Report {
 public:
  void add(CheckReport row);
  void append(const Report& other);
  const std::vector<CheckReport>& rows() const noexcept { return rows_; }
  std::size_t failures() const;
  bool empty() const noexcept { return rows_.empty(); }

  /// Header "check,left,right,slack,pass" followed by one row per check.
  std::string csv() const;
  /// "checks=N passed=P failed=F worst=<name>:<slack>".
  std::string summary() const;

 private:
  std::vector<CheckReport> rows_;
};

}  // namespace juntakit
