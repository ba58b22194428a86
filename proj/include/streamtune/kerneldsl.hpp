// Copyright 2026 The streamtune Authors
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

// Mini kernel description language.
//
// A kernel file is line oriented:
//
//   kernel <name>
//   param <name> ...
//   array <name> <element_bytes> <length_expr> <in|out|inout>
//   loop <index> <trip_count_expr> [parallel]
//     loop <index> <trip_count_expr> [parallel]     (nested: two more spaces)
//   transfer <array_name>
//   instructions <integer>
//   ghost <integer>
//   branch_miss <real in [0,1]>
//   l1_miss <real in [0,1]>
//
// '#' starts a comment. Loops form a single perfect nest; exactly one of them
// carries the parallel marker and is the loop split into tasks. Expressions
// use integer literals, declared parameters, + - * / and parentheses.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "streamtune/errors.hpp"

namespace streamtune {

using ParamMap = std::map<std::string, std::int64_t, std::less<>>;

/// Immutable integer expression tree with structural equality.
class Expr {
 public:
  enum class Kind { kLiteral, kParam, kAdd, kSub, kMul, kDiv };

  static Expr literal(std::int64_t value);
  static Expr param(std::string name);
  static Expr binary(Kind op, Expr lhs, Expr rhs);

  /// Parses a complete expression. Positions in errors are offset by
  /// (line, column) of the first character.
  static Expr parse(std::string_view text, std::size_t line = 0, std::size_t column = 1);

  Kind kind() const;
  std::int64_t value() const;
  const std::string& name() const;
  Expr lhs() const;
  Expr rhs() const;

  /// Throws DomainError on unbound parameters, division by zero or int64 overflow.
  std::int64_t evaluate(const ParamMap& params) const;

  /// Parameter names in first-occurrence order.
  std::vector<std::string> parameters() const;

  /// Canonical text; Expr::parse(e.to_string()) == e.
  std::string to_string() const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;
  friend struct ExprAccess;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

enum class Direction { kIn, kOut, kInOut };

struct ArraySpec {
  std::string name;
  int element_bytes = 0;
  Expr length = Expr::literal(0);
  Direction direction = Direction::kIn;

  bool host_to_device() const { return direction != Direction::kOut; }
  bool device_to_host() const { return direction != Direction::kIn; }

  friend bool operator==(const ArraySpec&, const ArraySpec&) = default;
};

struct LoopSpec {
  std::string index;
  Expr trip_count = Expr::literal(1);
  bool parallel = false;

  friend bool operator==(const LoopSpec&, const LoopSpec&) = default;
};

struct KernelSpec {
  std::string name;
  std::vector<std::string> params;
  std::vector<ArraySpec> arrays;
  std::vector<LoopSpec> loops;  // outermost first
  std::vector<std::string> transfers;
  std::int64_t instruction_count = 0;  // per innermost iteration
  std::int64_t ghost_elements = 0;     // per task boundary
  double branch_miss = 0.0;
  double l1_miss = 0.0;

  /// Index into loops of the loop carrying the parallel marker.
  std::size_t parallel_loop() const;
  const ArraySpec& array(std::string_view name) const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

KernelSpec parse_kernel(std::string_view source);
KernelSpec load_kernel(const std::string& path);
std::string print_kernel(const KernelSpec& kernel);

/// Evaluated trip count of every loop, outermost first. Each must be >= 1.
std::vector<std::int64_t> trip_counts(const KernelSpec& kernel, const ParamMap& params);

/// element_bytes * length for the named array.
std::int64_t array_bytes(const KernelSpec& kernel, const ArraySpec& array, const ParamMap& params);

struct StaticFeatures {
  std::int64_t loop_nest = 1;
  std::int64_t loop_count = 1;
  std::int64_t xfer_mem_count = 0;
  std::int64_t dts_bytes = 0;
  std::int64_t redundant_transfer_bytes = 0;
  std::int64_t max_blocks = 1;
  std::int64_t min_task_unit = 1;
  std::int64_t instruction_total = 0;

  friend bool operator==(const StaticFeatures&, const StaticFeatures&) = default;
};

/// Upper bound of the task axis of the profiling grid.
inline constexpr int kDefaultTaskBound = 256;

StaticFeatures extract_static_features(const KernelSpec& kernel, const ParamMap& params,
                                       int task_bound = kDefaultTaskBound);

}  // namespace streamtune
