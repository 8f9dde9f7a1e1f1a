#pragma once

#include <stdexcept>
#include <string>

namespace fsac {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// spatial weights
struct EmptyGraph : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };

// functional data
struct LengthMismatch : Error { using Error::Error; };
struct InvalidBasisCount : Error { using Error::Error; };
struct RankDeficientDesign : Error { using Error::Error; };

// partial least squares
struct DegenerateComponent : Error { using Error::Error; };
struct ScoreCollapse : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };

// likelihood estimation
struct SingularShift : Error { using Error::Error; };
struct SingularInformation : Error { using Error::Error; };
struct DegenerateVariance : Error { using Error::Error; };
struct OptimizerFailure : Error { using Error::Error; };
struct ConstantInput : Error { using Error::Error; };

// file ingestion
struct ParseError : Error { using Error::Error; };

}  // namespace fsac
