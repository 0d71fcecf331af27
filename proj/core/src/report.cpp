#include "bvmlab/report.hpp"

#include "bvmlab/dataset.hpp"
#include "bvmlab/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bvmlab {

namespace {

// Fields never contain quotes; commas are quoted.
std::string field(const std::string& s) {
  if (s.find(',') == std::string::npos) return s;
  return '"' + s + '"';
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void check_row(const ReportRow& row) {
  if (!std::isfinite(row.value)) {
    throw Error("non-finite value for metric '" + row.metric + "' in " + row.experiment);
  }
  if (!(row.mc_halfwidth >= 0.0)) {
    throw Error("negative halfwidth for metric '" + row.metric + "' in " + row.experiment);
  }
}

std::string csv_header() {
  return "experiment,replication,n,prior,metric,value,mc_halfwidth,bound_value,pass";
}

std::string to_csv_line(const ReportRow& r) {
  std::string out = field(r.experiment);
  out += ',';
  out += r.replication ? std::to_string(*r.replication) : std::string("all");
  out += ',' + format_double(r.n);
  out += ',' + field(r.prior);
  out += ',' + field(r.metric);
  out += ',' + format_double(r.value);
  out += ',' + format_double(r.mc_halfwidth);
  out += ',' + (r.bound ? format_double(*r.bound) : std::string());
  out += ',' + (r.pass ? std::string(*r.pass ? "true" : "false") : std::string());
  return out;
}

ReportRow parse_csv_line(const std::string& line) {
  const auto f = split_csv(line);
  if (f.size() != 9) throw ParseError("expected 9 fields: " + line);
  ReportRow r;
  r.experiment = f[0];
  if (f[1] != "all") r.replication = static_cast<Index>(std::stoll(f[1]));
  r.n = parse_double(f[2]);
  r.prior = f[3];
  r.metric = f[4];
  r.value = parse_double(f[5]);
  r.mc_halfwidth = parse_double(f[6]);
  if (!f[7].empty()) r.bound = parse_double(f[7]);
  if (f[8] == "true") {
    r.pass = true;
  } else if (f[8] == "false") {
    r.pass = false;
  } else if (!f[8].empty()) {
    throw ParseError("bad pass field: " + f[8]);
  }
  return r;
}

void write_report(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << csv_header() << '\n';
  for (const auto& r : rows) {
    check_row(r);
    out << to_csv_line(r) << '\n';
  }
}

std::vector<ReportRow> read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw ParseError("missing report header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_csv_line(line));
  }
  return rows;
}

std::string bounds_csv_header() { return "spec_id,x,z,empirical,bound,margin,pass"; }

void write_bounds(const std::vector<BoundsRow>& rows, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << bounds_csv_header() << '\n';
  for (const auto& r : rows) {
    out << field(r.spec_id) << ',' << format_double(r.x) << ',' << format_double(r.z) << ','
        << format_double(r.empirical) << ',' << format_double(r.bound) << ','
        << format_double(r.margin) << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

}  // namespace bvmlab
