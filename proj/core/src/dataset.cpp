#include "bvmlab/dataset.hpp"

#include "bvmlab/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace bvmlab {

std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::log_density: return "log_density";
    case ModelKind::logistic: return "logistic";
    case ModelKind::poisson: return "poisson";
    case ModelKind::gaussian_surrogate: return "gaussian_surrogate";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "log_density") return ModelKind::log_density;
  if (name == "logistic") return ModelKind::logistic;
  if (name == "poisson") return ModelKind::poisson;
  if (name == "gaussian_surrogate" || name == "surrogate") return ModelKind::gaussian_surrogate;
  throw ParseError("unknown model '" + std::string(name) + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

namespace {

template <typename T>
T parse_integer(std::string_view text) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("not an integer: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

std::string serialize(const Dataset& data) {
  std::string out;
  out.reserve(24 * data.observations.size() + 64);
  out += model_name(data.model);
  out += ',' + std::to_string(data.n) + ',' + std::to_string(data.p) + ',' +
         std::to_string(data.seed) + '\n';
  for (double v : data.observations) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

Dataset parse_dataset(std::string_view text) {
  Dataset data;
  std::size_t pos = text.find('\n');
  std::string_view header = text.substr(0, pos);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = header.find(',', start);
    fields.push_back(header.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 4) throw ParseError("dataset header must be model,n,p,seed");
  data.model = parse_model_kind(fields[0]);
  data.n = parse_integer<std::size_t>(fields[1]);
  data.p = parse_integer<std::size_t>(fields[2]);
  data.seed = parse_integer<std::uint64_t>(fields[3]);
  while (pos != std::string_view::npos && pos + 1 < text.size()) {
    const std::size_t next = text.find('\n', pos + 1);
    std::string_view line = text.substr(pos + 1, next == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : next - pos - 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) data.observations.push_back(parse_double(line));
    pos = next;
  }
  return data;
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize(data);
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

}  // namespace bvmlab
