#pragma once

#include <stdexcept>
#include <string>

namespace bvmlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BVMLAB_DEFINE_ERROR(Name)            \
  class Name : public Error {                \
   public:                                   \
    explicit Name(const std::string& what)   \
        : Error(#Name ": " + what) {}        \
  }

BVMLAB_DEFINE_ERROR(NotPositiveDefinite);
BVMLAB_DEFINE_ERROR(DimensionMismatch);
BVMLAB_DEFINE_ERROR(NotSymmetric);
BVMLAB_DEFINE_ERROR(NonFiniteIntegrand);
BVMLAB_DEFINE_ERROR(NotConverged);
BVMLAB_DEFINE_ERROR(NoCrossing);
BVMLAB_DEFINE_ERROR(ChainDiverged);
BVMLAB_DEFINE_ERROR(EmptyDenominator);
BVMLAB_DEFINE_ERROR(InsufficientData);
BVMLAB_DEFINE_ERROR(ConfigInvalid);
BVMLAB_DEFINE_ERROR(OrderingViolated);
BVMLAB_DEFINE_ERROR(DegenerateSpectrum);
BVMLAB_DEFINE_ERROR(ParseError);

#undef BVMLAB_DEFINE_ERROR

}  // namespace bvmlab
