// Copyright (c) 2026 The CBA Authors
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

#ifndef CBA_UTIL_ERRORS_HPP_
#define CBA_UTIL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace cba {

// Shape and argument problems use std::invalid_argument directly.

/// A caller broke a documented precondition that is not a plain bad argument
/// (e.g. a non-deterministic closure, a phrase missing from its reference).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Configuration is inconsistent or incomplete.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Beam search produced no finite hypothesis.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cba

#endif  // CBA_UTIL_ERRORS_HPP_
