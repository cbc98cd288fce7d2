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

#include "cba/numeric/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "cba/util/binary_io.hpp"

namespace cba::nn {
namespace {

using io::get_le;
using io::put_le;

constexpr char kMagic[4] = {'C', 'B', 'A', '1'};

}  // namespace

void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors) {
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, tensors.size());
  for (const auto& t : tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_le<std::uint32_t>(out, 2);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.cols()));
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        io::put_f64(out, t.value(r, c));
      }
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

std::vector<NamedTensor> read_tensors(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = get_le<std::uint64_t>(in);
  std::vector<NamedTensor> tensors;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto len = get_le<std::uint32_t>(in);
    t.name.resize(len);
    in.read(t.name.data(), len);
    const auto rank = get_le<std::uint32_t>(in);
    if (rank > 2) throw std::runtime_error("checkpoint: rank " + std::to_string(rank) + " for " + t.name);
    std::uint64_t rows = 1, cols = 1;
    if (rank == 1) {
      cols = get_le<std::uint64_t>(in);
    } else if (rank == 2) {
      rows = get_le<std::uint64_t>(in);
      cols = get_le<std::uint64_t>(in);
    }
    t.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        t.value(r, c) = io::get_f64(in);
      }
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void save_checkpoint(const std::string& path, const ParameterStore& params) {
  std::vector<NamedTensor> tensors;
  tensors.reserve(params.size());
  for (const auto& p : params) tensors.push_back({p->name, p->value});
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_tensors(out, tensors);
}

LoadReport assign_tensors(const std::vector<NamedTensor>& tensors, ParameterStore& params) {
  LoadReport report;
  std::string mismatches;
  for (const auto& t : tensors) {
    Parameter* p = params.find(t.name);
    if (p == nullptr) {
      report.unexpected.push_back(t.name);
    } else if (p->value.rows() != t.value.rows() || p->value.cols() != t.value.cols()) {
      mismatches += " " + t.name + " (model " + std::to_string(p->value.rows()) + "x" +
                    std::to_string(p->value.cols()) + ", file " + std::to_string(t.value.rows()) +
                    "x" + std::to_string(t.value.cols()) + ")";
    }
  }
  if (!mismatches.empty()) {
    throw std::invalid_argument("checkpoint dimension mismatch:" + mismatches);
  }
  for (const auto& t : tensors) {
    if (Parameter* p = params.find(t.name)) {
      p->value = t.value;
      report.loaded.push_back(t.name);
    }
  }
  for (const auto& p : params) {
    bool found = false;
    for (const auto& name : report.loaded) found = found || name == p->name;
    if (!found) report.missing.push_back(p->name);
  }
  return report;
}

LoadReport load_checkpoint(const std::string& path, ParameterStore& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return assign_tensors(read_tensors(in), params);
}

}  // namespace cba::nn
