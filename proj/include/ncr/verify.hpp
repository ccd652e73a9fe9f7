#pragma once

// Invariant suite over one model. Every check runs with its own seed derived
// from the suite seed, so rows do not depend on evaluation order.

#include <cstdint>
#include <string>
#include <vector>

#include "ncr/ncmodel.hpp"

namespace ncr {

struct CheckRow {
  std::string id;
  bool pass = true;
  std::string detail;
  std::string witness;  // "chart;point;seed" for failures
};

struct Report {
  std::string model;
  std::uint64_t seed = 1;
  std::vector<CheckRow> rows;  // sorted by id

  bool all_pass() const;
  std::string table() const;
  std::string csv() const;
  static std::string csv_header();
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  int samples = 200;
};

Report verify_suite(const NCModel& model, const VerifyOptions& opts = {});

// Shared formatting: shortest round-trip text of a point, "(a, b)".
std::string format_point(const std::vector<double>& x);

}  // namespace ncr
