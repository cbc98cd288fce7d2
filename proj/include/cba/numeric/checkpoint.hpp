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

// Binary tensor archive:
//
//   "CBA1" | u32 version | u64 record count
//   per record: u32 name length | UTF-8 name | u32 rank | u64 dims[rank] |
//               f64 values, row-major
//
// All integers and floats are little-endian.

#ifndef CBA_NUMERIC_CHECKPOINT_HPP_
#define CBA_NUMERIC_CHECKPOINT_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cba/numeric/graph.hpp"

namespace cba::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
};

void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(std::istream& in);

void save_checkpoint(const std::string& path, const ParameterStore& params);

struct LoadReport {
  std::vector<std::string> loaded;
  /// In the store but absent from the file; left at their current values.
  std::vector<std::string> missing;
  /// In the file but unknown to the store.
  std::vector<std::string> unexpected;
};

/// Copies matching tensors into `params`. Any shape mismatch aborts the load
/// with std::invalid_argument listing every offending parameter, leaving
/// `params` untouched.
LoadReport load_checkpoint(const std::string& path, ParameterStore& params);
LoadReport assign_tensors(const std::vector<NamedTensor>& tensors, ParameterStore& params);

}  // namespace cba::nn

#endif  // CBA_NUMERIC_CHECKPOINT_HPP_
