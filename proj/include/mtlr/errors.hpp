#pragma once

#include <stdexcept>
#include <string>

namespace mtlr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MTLR_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

// linreg-core / error-bounds
MTLR_DEFINE_ERROR(RankDeficient);
MTLR_DEFINE_ERROR(DimensionMismatch);
MTLR_DEFINE_ERROR(ShiftRequiresIntercept);
MTLR_DEFINE_ERROR(IndexOutOfRange);
MTLR_DEFINE_ERROR(InvalidArgument);

// dataset-gen
MTLR_DEFINE_ERROR(InfeasibleSpec);

// mr-engine
MTLR_DEFINE_ERROR(Inapplicable);
MTLR_DEFINE_ERROR(MissingSourceOutput);

// sut-harness
MTLR_DEFINE_ERROR(HarnessIoError);
MTLR_DEFINE_ERROR(DeadlineExpired);

// mutant-zoo
MTLR_DEFINE_ERROR(UnknownFault);

// campaign
MTLR_DEFINE_ERROR(NoSurvivedPairs);

#undef MTLR_DEFINE_ERROR

}  // namespace mtlr
