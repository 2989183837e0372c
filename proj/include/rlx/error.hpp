#pragma once

#include <stdexcept>
#include <string>

namespace rlx {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ----- layout / environment -----

struct NonRectangularError : Error {
  using Error::Error;
};
struct MissingAgentError : Error {
  using Error::Error;
};
struct UnknownCharError : Error {
  using Error::Error;
};
struct InvalidLayoutError : Error {
  using Error::Error;
};
struct SteppedTerminalError : Error {
  using Error::Error;
};
struct ShapeMismatchError : Error {
  using Error::Error;
};

// ----- serialization -----

struct IoError : Error {
  using Error::Error;
};
struct VersionMismatchError : Error {
  using Error::Error;
};
struct ManifestMismatchError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};

// ----- algorithms -----

struct OverlappingPartsError : Error {
  using Error::Error;
};
struct DivergedLossError : Error {
  using Error::Error;
};
struct EmptySampleError : Error {
  using Error::Error;
};
struct UsageError : Error {
  using Error::Error;
};

}  // namespace rlx
