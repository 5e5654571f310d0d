/*
 * restriction.hpp
 *
 * This source file is part of the otto project.
 *
 * Copyright 2026 the otto authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "otto/types.hpp"

namespace otto {

/// Compiled form of a DoeParams::restriction expression: a small infix
/// language over knob names with arithmetic (+ - * /), comparisons
/// (< <= > >= == !=), logic (&& ||), parentheses and unary minus.
/// Example: "x + y <= 1 && x >= 0".
///
/// The textual form is what travels inside the application description, so
/// clients and server compile the same predicate independently.
class Restriction {
 public:
  /// The empty expression, always true.
  Restriction() = default;

  /// Compiles `text` against the knob name list. Throws Error on syntax
  /// errors or unknown identifiers. Empty text compiles to always-true.
  static Restriction compile(const std::string& text,
                             const std::vector<KnobDomain>& knobs);

  bool evaluate(const KnobConfig& config) const;
  bool always_true() const { return root_ == nullptr; }
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace otto
