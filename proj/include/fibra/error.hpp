#pragma once

#include <stdexcept>
#include <string>

namespace fibra {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// det(F) <= 0, degenerate geometry, inverted elements.
struct KinematicsError : Error {
  using Error::Error;
};

// divergence, singular tangent, non-convergence treated as fatal by the caller
struct SolverError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace fibra
