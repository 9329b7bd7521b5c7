#pragma once

#include <stdexcept>
#include <string>

namespace dstack {

// Base of every recoverable library error. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MaskError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Every centroid of a k-means member was masked; pool_decide turns this into
// an all-zero feature block.
class TotalAblationError : public MaskError {
 public:
  using MaskError::MaskError;
};

// An internal postcondition failed. Not derived from Error: it signals a bug,
// and the CLI reports it with exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dstack
