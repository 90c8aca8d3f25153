// Copyright 2026 The fgvasp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fgv {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data is inconsistent (dangling ids, missing labels, bad files).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A text input could not be parsed. Carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Matrix or parameter shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class CryptoError : public Error {
 public:
  using Error::Error;
};

/// AEAD tag verification failed; the envelope must be discarded.
class AuthenticationError : public CryptoError {
 public:
  using CryptoError::CryptoError;
};

/// Malformed configuration file or flag value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fgv
