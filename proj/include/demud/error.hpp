// Copyright 2026 The demud Authors.
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

namespace demud {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. `row` is the 1-based line number in the file
/// (header is line 1); `column` names the offending column when known.
class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t row, std::string column,
             const std::string& what)
      : Error(format(path, row, column, what)),
        path_(std::move(path)),
        row_(row),
        column_(std::move(column)) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& path, std::size_t row,
                            const std::string& column,
                            const std::string& what) {
    std::string msg = path.empty() ? std::string("parse error") : path;
    if (row > 0) msg += ":" + std::to_string(row);
    if (!column.empty()) msg += " (column " + column + ")";
    return msg + ": " + what;
  }

  std::string path_;
  std::size_t row_ = 0;
  std::string column_;
};

/// Malformed or truncated binary container.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid run or tool configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A selected item has no class label.
class LabelError : public Error {
 public:
  explicit LabelError(std::string id)
      : Error("no label for item '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

/// Vector or matrix dimensions disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace demud
