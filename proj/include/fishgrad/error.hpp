// Copyright 2026 The fishgrad Authors.
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

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fishgrad {

/// Error categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
  usage,       // exit 1
  validation,  // exit 2
  runtime,     // exit 3
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
      return "usage";
    case ErrorKind::validation:
      return "validation";
    case ErrorKind::runtime:
      return "runtime";
  }
  return "runtime";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by tape ops when operand shapes are incompatible.
class ShapeError : public Error {
 public:
  ShapeError(std::string op, std::vector<std::size_t> lhs,
             std::vector<std::size_t> rhs)
      : Error(ErrorKind::validation, format(op, lhs, rhs)),
        op_(std::move(op)),
        lhs_(std::move(lhs)),
        rhs_(std::move(rhs)) {}

  [[nodiscard]] const std::string& op() const noexcept { return op_; }
  [[nodiscard]] const std::vector<std::size_t>& lhs() const noexcept {
    return lhs_;
  }
  [[nodiscard]] const std::vector<std::size_t>& rhs() const noexcept {
    return rhs_;
  }

  static std::string dims(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) os << 'x';
      os << shape[i];
    }
    os << ']';
    return os.str();
  }

 private:
  static std::string format(const std::string& op,
                            const std::vector<std::size_t>& lhs,
                            const std::vector<std::size_t>& rhs) {
    std::string msg = "shape mismatch in " + op + ": " + dims(lhs);
    if (!rhs.empty()) msg += " vs " + dims(rhs);
    return msg;
  }

  std::string op_;
  std::vector<std::size_t> lhs_;
  std::vector<std::size_t> rhs_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool ok, const std::string& message,
                    ErrorKind kind = ErrorKind::validation) {
  if (!ok) throw Error(kind, message);
}

}  // namespace fishgrad
