/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#pragma once

#include <stdexcept>
#include <string>

namespace vrom {

/// Failure categories; the numeric values are mirrored by vrom_status in the C API.
enum class ErrorCode : int {
  Config = 1,
  NumericalBlowup = 2,
  Io = 3,
  Format = 4,
  SingularReducedPoisson = 5,
  ModelIntegrity = 6,
  NoBasis = 7,
  OutOfRange = 8,
  UndefinedError = 9,
  MemoryCap = 10,
  InvalidArgument = 11,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a time march produces a non-finite value.
class BlowupError : public Error {
 public:
  BlowupError(double last_valid_time, const std::string& what)
      : Error(ErrorCode::NumericalBlowup, what), last_valid_time_(last_valid_time) {}

  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace vrom
