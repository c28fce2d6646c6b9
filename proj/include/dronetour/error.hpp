#pragma once

#include <stdexcept>
#include <string>

namespace dronetour {

// Failure categories double as CLI exit codes.
enum class ErrorCategory : int {
  kInvalidInput = 2,
  kNoPath = 3,
  kInfeasible = 4,
  kNumerical = 5,
  kParse = 6,
  kIo = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define DRONETOUR_DEFINE_ERROR(Name, Category)                       \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(Category, what) {} \
  };

DRONETOUR_DEFINE_ERROR(InvalidArgument, ErrorCategory::kInvalidInput)
DRONETOUR_DEFINE_ERROR(NoPath, ErrorCategory::kNoPath)
DRONETOUR_DEFINE_ERROR(NoRendezvous, ErrorCategory::kInfeasible)
DRONETOUR_DEFINE_ERROR(InfeasibleEnergy, ErrorCategory::kInfeasible)
DRONETOUR_DEFINE_ERROR(BandError, ErrorCategory::kInfeasible)
DRONETOUR_DEFINE_ERROR(HorizonTooShort, ErrorCategory::kInvalidInput)
DRONETOUR_DEFINE_ERROR(SizeError, ErrorCategory::kInvalidInput)
DRONETOUR_DEFINE_ERROR(SamplingError, ErrorCategory::kInfeasible)
DRONETOUR_DEFINE_ERROR(EmptyDataset, ErrorCategory::kInvalidInput)
DRONETOUR_DEFINE_ERROR(DivergenceError, ErrorCategory::kNumerical)
DRONETOUR_DEFINE_ERROR(ParseError, ErrorCategory::kParse)
DRONETOUR_DEFINE_ERROR(IncompatibleVersion, ErrorCategory::kParse)
DRONETOUR_DEFINE_ERROR(IoError, ErrorCategory::kIo)

#undef DRONETOUR_DEFINE_ERROR

}  // namespace dronetour
