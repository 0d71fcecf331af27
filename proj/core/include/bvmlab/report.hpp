#pragma once

#include "bvmlab/numerics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bvmlab {

// One metric value. Rows without a replication index are aggregates over
// replications; aggregate rows carrying pass = false are failed hard checks.
struct ReportRow {
  std::string experiment;
  std::optional<Index> replication;
  double n = 0.0;
  std::string prior;
  std::string metric;
  double value = 0.0;
  double mc_halfwidth = 0.0;
  std::optional<double> bound;
  std::optional<bool> pass;

  bool hard_check() const { return !replication.has_value() && pass.has_value(); }
};

// Throws Error when the value is not finite or the halfwidth is negative.
void check_row(const ReportRow& row);

std::string csv_header();
std::string to_csv_line(const ReportRow& row);
ReportRow parse_csv_line(const std::string& line);

void write_report(const std::vector<ReportRow>& rows, const std::filesystem::path& path);
std::vector<ReportRow> read_report(const std::filesystem::path& path);

// Row of the tail-bound validation table.
struct BoundsRow {
  std::string spec_id;
  double x = 0.0;
  double z = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - empirical
  bool pass = false;
};

std::string bounds_csv_header();
void write_bounds(const std::vector<BoundsRow>& rows, const std::filesystem::path& path);

}  // namespace bvmlab
