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

#include "cba/numeric/graph.hpp"

#include <stdexcept>

namespace cba::nn {

Parameter& ParameterStore::add(const std::string& name, Matrix value) {
  if (index_.count(name) != 0) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  index_[name] = params_.back().get();
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

Parameter& ParameterStore::at(const std::string& name) {
  Parameter* p = find(name);
  if (p == nullptr) throw std::invalid_argument("unknown parameter: " + name);
  return *p;
}

const Parameter& ParameterStore::at(const std::string& name) const {
  const Parameter* p = find(name);
  if (p == nullptr) throw std::invalid_argument("unknown parameter: " + name);
  return *p;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

const Matrix& Var::value() const { return graph->value(id); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw std::invalid_argument("scalar(): value is " + std::to_string(v.rows()) +
                                "x" + std::to_string(v.cols()));
  }
  return v(0, 0);
}

Var Graph::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr, nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{this, it->second};
  nodes_.push_back(Node{Matrix(), Matrix(), false, &p, nullptr});
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_[&p] = id;
  return Var{this, id};
}

Var Graph::record(Matrix value, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr,
                        record_ ? std::move(backward) : Backward()});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Matrix& Graph::grad(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    const Matrix& v = value(id);
    n.grad = Matrix::Zero(v.rows(), v.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::accumulate(int id, const Matrix& g) {
  Matrix& acc = grad(id);
  if (acc.rows() != g.rows() || acc.cols() != g.cols()) {
    throw std::logic_error("gradient shape mismatch at node " + std::to_string(id));
  }
  acc += g;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw std::invalid_argument("backward: foreign Var");
  if (!record_) throw std::logic_error("backward: graph was built without recording");
  if (value(loss.id).size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                std::to_string(value(loss.id).rows()) + "x" +
                                std::to_string(value(loss.id).cols()));
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  grad(loss.id)(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad) continue;
    if (n.backward) {
      // Closures only write to their inputs, which precede this node.
      n.backward(*this, n.grad);
    } else if (n.param != nullptr) {
      n.param->grad += n.grad;
    }
  }
}

}  // namespace cba::nn
