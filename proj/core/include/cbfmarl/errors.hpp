#pragma once

#include <stdexcept>
#include <string>

namespace cbfmarl {

/// Invalid or inconsistent configuration (CLI exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required input file or checkpoint is absent (CLI exit status 3).
class MissingFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values during training or evaluation (CLI exit status 4).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cbfmarl
