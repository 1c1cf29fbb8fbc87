#pragma once

#include <stdexcept>
#include <string>

namespace df {

// Error taxonomy maps one-to-one onto the CLI exit codes:
// config=2, dependency=3, diverged=4; everything else exits 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct ArgumentError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct DependencyError : Error {
  using Error::Error;
};

struct DivergedError : Error {
  DivergedError(const std::string& msg, int epoch) : Error(msg), epoch(epoch) {}
  int epoch;
};

struct ShapeError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

}  // namespace df
