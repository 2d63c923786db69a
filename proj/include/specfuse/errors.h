/*
 * Copyright 2026 The specfuse Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SPECFUSE_ERRORS_H_
#define SPECFUSE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace specfuse {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes or lengths do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated (asymmetric matrix, off-simplex
// weights, non-PSD spectrum, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Too few samples for the requested statistic.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Malformed input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Partition regime cannot be realized on the given dataset.
class PartitionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration key or value.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message),
        key_(std::move(key)) {}

  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace specfuse

#endif  // SPECFUSE_ERRORS_H_
