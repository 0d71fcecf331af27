#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bvmlab {

enum class ModelKind { log_density, logistic, poisson, gaussian_surrogate };

std::string_view model_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Text format: a header line "model,n,p,seed" followed by one observation
// per line. Doubles are written in shortest round-trip form.
struct Dataset {
  ModelKind model = ModelKind::log_density;
  std::size_t n = 0;
  std::size_t p = 0;
  std::uint64_t seed = 0;
  std::vector<double> observations;

  bool operator==(const Dataset&) const = default;
};

std::string serialize(const Dataset& data);
Dataset parse_dataset(std::string_view text);
void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace bvmlab
