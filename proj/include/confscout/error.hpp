// Copyright 2026 The confscout Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace confscout {

// Base of everything the library throws on bad input or failed I/O.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (documents, record files, instances).
class DataError : public Error {
 public:
  using Error::Error;
};

// A parse failure that can be located: a JSON field path or a line number.
class ParseError : public DataError {
 public:
  ParseError(std::string where, const std::string& what)
      : DataError(where.empty() ? what : where + ": " + what),
        where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

// Binary model payloads: wrong magic/version or truncated data.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// The solver adapter could not be launched at all.
class AdapterError : public Error {
 public:
  using Error::Error;
};

}  // namespace confscout
