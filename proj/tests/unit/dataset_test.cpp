#include "bvmlab/dataset.hpp"
#include "bvmlab/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

namespace bvmlab {
namespace {

TEST(Dataset, SerializeRoundTrip) {
  Dataset d;
  d.model = ModelKind::logistic;
  d.n = 4;
  d.p = 16;
  d.seed = 123456789012345ULL;
  d.observations = {0.0, 1.0, 0.1, -1.0 / 3.0};
  const std::string text = serialize(d);
  EXPECT_EQ(text.substr(0, text.find('\n')), "logistic,4,16,123456789012345");
  EXPECT_EQ(parse_dataset(text), d);
}

TEST(Dataset, FileRoundTrip) {
  Dataset d;
  d.model = ModelKind::log_density;
  d.n = 3;
  d.p = 8;
  d.seed = 7;
  d.observations = {0.25, 0.5, 0.9999999999999999};
  const auto path = std::filesystem::temp_directory_path() / "bvmlab_dataset_test.csv";
  write_dataset(d, path);
  EXPECT_EQ(read_dataset(path), d);
  std::filesystem::remove(path);
}

TEST(Dataset, ModelNamesRoundTrip) {
  for (ModelKind k : {ModelKind::log_density, ModelKind::logistic, ModelKind::poisson,
                      ModelKind::gaussian_surrogate}) {
    EXPECT_EQ(parse_model_kind(model_name(k)), k);
  }
  EXPECT_THROW(parse_model_kind("probit"), ParseError);
}

TEST(Dataset, MalformedInputThrows) {
  EXPECT_THROW(parse_dataset("logistic,4,16\n1\n"), ParseError);
  EXPECT_THROW(parse_dataset("logistic,4,x,1\n1\n"), ParseError);
  EXPECT_THROW(parse_dataset("logistic,1,2,1\nabc\n"), ParseError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  for (double v : {std::acos(-1.0), 1e-300, -2.5e17, 5e-324, 0.30000000000000004}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
}

}  // namespace
}  // namespace bvmlab
