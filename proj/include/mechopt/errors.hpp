#pragma once

#include <stdexcept>
#include <string>

namespace mechopt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergence : Error { using Error::Error; };
struct InvalidInterval : Error { using Error::Error; };
struct NoSignChange : Error { using Error::Error; };
struct CurveDomainMismatch : Error { using Error::Error; };
struct InvalidParameter : Error { using Error::Error; };
struct OutOfSupport : Error { using Error::Error; };
struct NoSolution : Error { using Error::Error; };
struct MalformedRegion : Error { using Error::Error; };
struct MassMismatch : Error { using Error::Error; };
struct NotOnHyperplane : Error { using Error::Error; };
struct CurveNotFound : Error { using Error::Error; };
struct NonConcaveAssembly : Error { using Error::Error; };
struct SlopeOutOfRange : Error { using Error::Error; };
struct SizeLimit : Error { using Error::Error; };
struct Unbounded : Error { using Error::Error; };
struct InfeasibleInput : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace mechopt
