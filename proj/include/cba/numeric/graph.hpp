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

// Tape-based reverse-mode differentiation over dense double matrices.
//
// A Graph records every primitive executed through it together with a
// backward closure. Graph::backward() walks the records once in reverse
// order, propagating adjoints, and finally accumulates the adjoints of
// parameter leaves into Parameter::grad.

#ifndef CBA_NUMERIC_GRAPH_HPP_
#define CBA_NUMERIC_GRAPH_HPP_

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "cba/numeric/kernels.hpp"

namespace cba::nn {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)),
        grad(Matrix::Zero(value.rows(), value.cols())) {}
};

/// Owns parameters with stable addresses, in registration order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Matrix value);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;

  void zero_grad();
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> index_;
};

class Graph;

/// Handle to a value recorded on a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
};

class Graph {
 public:
  using Backward = std::function<void(Graph&, const Matrix& out_grad)>;

  /// With recording disabled no backward closures are kept; used for
  /// inference and finite-difference probes.
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix value);
  /// One leaf per parameter per graph; repeated calls return the same Var.
  /// The leaf aliases the parameter value, so parameters must not change
  /// while the graph is alive.
  Var param(Parameter& p);
  Var record(Matrix value, Backward backward);

  const Matrix& value(int id) const {
    const Node& n = nodes_[id];
    return n.param != nullptr ? n.param->value : n.value;
  }
  /// Adjoint accumulator for node `id`; allocated on first touch.
  Matrix& grad(int id);
  void accumulate(int id, const Matrix& g);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };
  bool record_;
  // deque keeps value references stable while the tape grows.
  std::deque<Node> nodes_;
  std::unordered_map<Parameter*, int> param_nodes_;
};

}  // namespace cba::nn

#endif  // CBA_NUMERIC_GRAPH_HPP_
