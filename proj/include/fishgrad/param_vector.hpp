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
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fishgrad/error.hpp"
#include "fishgrad/random.hpp"

namespace fishgrad {

/// A named, shaped slice of the flat parameter vector.
struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  [[nodiscard]] std::size_t length() const noexcept { return rows * cols; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Position of a flat index inside the segment table.
struct SegmentPosition {
  std::size_t segment = 0;
  std::size_t position = 0;

  friend bool operator==(const SegmentPosition&,
                         const SegmentPosition&) = default;
};

/// Flat, contiguously indexed storage for every model parameter.
///
/// Segments are appended in order and always partition [0, size()). The
/// flat index of a parameter never changes once its segment is added.
class ParamVector {
 public:
  ParamVector() = default;

  /// Appends a rows x cols segment and returns its index.
  std::size_t add_segment(std::string name, std::size_t rows,
                          std::size_t cols) {
    require(rows > 0 && cols > 0,
            "segment '" + name + "' must have positive dimensions");
    for (const auto& s : segments_) {
      require(s.name != name, "duplicate segment name '" + name + "'");
    }
    segments_.push_back({std::move(name), data_.size(), rows, cols});
    data_.resize(data_.size() + rows * cols, 0.0);
    return segments_.size() - 1;
  }

  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] const std::vector<Segment>& segments() const noexcept {
    return segments_;
  }

  [[nodiscard]] const Segment& segment(std::string_view name) const {
    for (const auto& s : segments_) {
      if (s.name == name) return s;
    }
    fail(ErrorKind::validation, "no segment named '" + std::string(name) + "'");
  }

  [[nodiscard]] std::span<double> view(const Segment& s) {
    return std::span<double>(data_).subspan(s.offset, s.length());
  }
  [[nodiscard]] std::span<const double> view(const Segment& s) const {
    return std::span<const double>(data_).subspan(s.offset, s.length());
  }

  [[nodiscard]] SegmentPosition locate(std::size_t flat) const {
    require(flat < data_.size(), "flat index out of range");
    // Segments are sorted by offset; a linear scan is fine for the handful a
    // model has.
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& s = segments_[i];
      if (flat < s.offset + s.length()) return {i, flat - s.offset};
    }
    fail(ErrorKind::runtime, "segment table does not cover index");
  }

  [[nodiscard]] std::size_t flat_index(SegmentPosition pos) const {
    const auto& s = segments_.at(pos.segment);
    require(pos.position < s.length(), "segment position out of range");
    return s.offset + pos.position;
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] double at(SegmentPosition pos) const {
    return data_[flat_index(pos)];
  }
  void set(SegmentPosition pos, double v) { data_[flat_index(pos)] = v; }

  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept {
    return data_;
  }

  /// Content hash over the segment table and the parameter values.
  [[nodiscard]] std::uint64_t hash() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& s : segments_) {
      h = fnv1a(s.name, h);
      const std::uint64_t dims[3] = {s.offset, s.rows, s.cols};
      h = fnv1a(dims, sizeof dims, h);
    }
    return hash_values(data_, h);
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<Segment> segments_;
  std::vector<double> data_;
};

}  // namespace fishgrad
