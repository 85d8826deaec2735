// Copyright 2026 The eraser-sim Authors
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

namespace eraser {

inline constexpr const char* kVersion = "0.1.0";

/// A caller supplied a value outside the documented domain (bad wavelength,
/// t outside [0,1], empty grid, ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A precondition that the caller is responsible for was broken (mismatched
/// field snapshots, non-vacuum absorber, contradictory scenario override).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The truncated Fock space lost more norm than the oracle tolerates.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Visibility requested for data whose extrema sum to zero.
class UndefinedVisibility : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace eraser
