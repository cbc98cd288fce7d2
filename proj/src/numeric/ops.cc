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

#include "cba/numeric/ops.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cba::nn {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void shape_error(const char* op, std::initializer_list<Var> vars) {
  std::ostringstream os;
  os << op << ": shape mismatch";
  for (const Var& v : vars) os << " (" << shape(v.value()) << ")";
  throw std::invalid_argument(os.str());
}

Graph& same_graph(const char* op, Var a, Var b) {
  if (a.graph == nullptr || a.graph != b.graph) {
    throw std::invalid_argument(std::string(op) + ": operands live on different graphs");
  }
  return *a.graph;
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = same_graph("matmul", a, b);
  if (a.cols() != b.rows()) shape_error("matmul", {a, b});
  const int ia = a.id, ib = b.id;
  return g.record(a.value() * b.value(), [ia, ib](Graph& gr, const Matrix& og) {
    gr.grad(ia).noalias() += og * gr.value(ib).transpose();
    gr.grad(ib).noalias() += gr.value(ia).transpose() * og;
  });
}

Var matmul_nt(Var a, Var b) {
  Graph& g = same_graph("matmul_nt", a, b);
  if (a.cols() != b.cols()) shape_error("matmul_nt", {a, b});
  const int ia = a.id, ib = b.id;
  return g.record(a.value() * b.value().transpose(), [ia, ib](Graph& gr, const Matrix& og) {
    gr.grad(ia).noalias() += og * gr.value(ib);
    gr.grad(ib).noalias() += og.transpose() * gr.value(ia);
  });
}

Var add(Var a, Var b) {
  Graph& g = same_graph("add", a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", {a, b});
  const int ia = a.id, ib = b.id;
  return g.record(a.value() + b.value(), [ia, ib](Graph& gr, const Matrix& og) {
    gr.grad(ia) += og;
    gr.grad(ib) += og;
  });
}

Var add_row(Var a, Var row) {
  Graph& g = same_graph("add_row", a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("add_row", {a, row});
  const int ia = a.id, ir = row.id;
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return g.record(std::move(out), [ia, ir](Graph& gr, const Matrix& og) {
    gr.grad(ia) += og;
    gr.grad(ir) += og.colwise().sum();
  });
}

Var mul(Var a, Var b) {
  Graph& g = same_graph("mul", a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", {a, b});
  const int ia = a.id, ib = b.id;
  return g.record(a.value().cwiseProduct(b.value()), [ia, ib](Graph& gr, const Matrix& og) {
    gr.grad(ia) += og.cwiseProduct(gr.value(ib));
    gr.grad(ib) += og.cwiseProduct(gr.value(ia));
  });
}

Var dropout(Var a, double p, Rng* rng) {
  if (rng == nullptr || p <= 0.0) return a;
  Matrix keep(a.rows(), a.cols());
  for (Eigen::Index c = 0; c < keep.cols(); ++c) {
    for (Eigen::Index r = 0; r < keep.rows(); ++r) keep(r, c) = rng->uniform() < p ? 0.0 : 1.0 / (1.0 - p);
  }
  const int ia = a.id;
  Matrix out = a.value().cwiseProduct(keep);
  return a.graph->record(std::move(out), [ia, keep = std::move(keep)](Graph& gr, const Matrix& og) {
    gr.grad(ia) += og.cwiseProduct(keep);
  });
}

Var scale(Var a, double s) {
  const int ia = a.id;
  return a.graph->record(a.value() * s, [ia, s](Graph& gr, const Matrix& og) {
    gr.grad(ia) += og * s;
  });
}

Var sigmoid(Var a) {
  const int ia = a.id;
  Graph& g = *a.graph;
  const int ir = static_cast<int>(g.node_count());
  return g.record(a.value().unaryExpr([](double v) { return nn::sigmoid(v); }),
                  [ia, ir](Graph& gr, const Matrix& og) {
                    const Matrix& y = gr.value(ir);
                    gr.grad(ia).array() += og.array() * y.array() * (1.0 - y.array());
                  });
}

Var tanh(Var a) {
  const int ia = a.id;
  Graph& g = *a.graph;
  const int ir = static_cast<int>(g.node_count());
  return g.record(a.value().array().tanh().matrix(), [ia, ir](Graph& gr, const Matrix& og) {
    const Matrix& y = gr.value(ir);
    gr.grad(ia).array() += og.array() * (1.0 - y.array().square());
  });
}

Var relu(Var a) {
  const int ia = a.id;
  return a.graph->record(a.value().cwiseMax(0.0), [ia](Graph& gr, const Matrix& og) {
    gr.grad(ia) += (gr.value(ia).array() > 0.0).select(og, 0.0).matrix();
  });
}

Var softmax_rows(Var a) {
  const int ia = a.id;
  Graph& g = *a.graph;
  const int ir = static_cast<int>(g.node_count());
  return g.record(nn::softmax_rows(a.value()), [ia, ir](Graph& gr, const Matrix& og) {
    const Matrix& y = gr.value(ir);
    const Vector dot = og.cwiseProduct(y).rowwise().sum();
    Matrix gx = og;
    gx.colwise() -= dot;
    gr.grad(ia) += y.cwiseProduct(gx);
  });
}

Var log_softmax_rows(Var a) {
  const int ia = a.id;
  Graph& g = *a.graph;
  const int ir = static_cast<int>(g.node_count());
  return g.record(nn::log_softmax_rows(a.value()), [ia, ir](Graph& gr, const Matrix& og) {
    const Vector total = og.rowwise().sum();
    Matrix& ga = gr.grad(ia);
    ga += og;
    ga -= (gr.value(ir).array().exp().colwise() * total.array()).matrix();
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Graph& g = same_graph("layer_norm", x, gain);
  if (gain.rows() != 1 || gain.cols() != x.cols() || bias.rows() != 1 ||
      bias.cols() != x.cols()) {
    shape_error("layer_norm", {x, gain, bias});
  }
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.cols();
  Matrix xhat(xv.rows(), n);
  Vector inv_std(xv.rows());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) {
    const double mean = xv.row(i).mean();
    const double var = (xv.row(i).array() - mean).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (xv.row(i).array() - mean) * inv_std(i);
  }
  Matrix out = xhat.array().rowwise() * gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  const int ix = x.id, ig = gain.id, ib = bias.id;
  return g.record(std::move(out), [ix, ig, ib, xhat, inv_std, n](Graph& gr, const Matrix& og) {
    gr.grad(ig) += og.cwiseProduct(xhat).colwise().sum();
    gr.grad(ib) += og.colwise().sum();
    const Matrix gxhat = og.array().rowwise() * gr.value(ig).row(0).array();
    Matrix& gx = gr.grad(ix);
    for (Eigen::Index i = 0; i < gxhat.rows(); ++i) {
      const double m1 = gxhat.row(i).mean();
      const double m2 = gxhat.row(i).cwiseProduct(xhat.row(i)).sum() / double(n);
      gx.row(i).array() += inv_std(i) * (gxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
    }
  });
}

Var embedding(Var table, std::span<const int> ids) {
  const Matrix& t = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) {
      throw std::invalid_argument("embedding: id " + std::to_string(ids[i]) +
                                  " out of range for table " + shape(t));
    }
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  const int it = table.id;
  std::vector<int> idx(ids.begin(), ids.end());
  return table.graph->record(std::move(out), [it, idx](Graph& gr, const Matrix& og) {
    Matrix& gt = gr.grad(it);
    for (std::size_t i = 0; i < idx.size(); ++i) gt.row(idx[i]) += og.row(static_cast<Eigen::Index>(i));
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows || p.graph != parts[0].graph) {
      throw std::invalid_argument("concat_cols: shape mismatch (" + shape(parts[0].value()) +
                                  ") vs (" + shape(p.value()) + ")");
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    spans.emplace_back(p.id, off);
    off += p.cols();
  }
  return parts[0].graph->record(std::move(out), [spans](Graph& gr, const Matrix& og) {
    for (const auto& [id, start] : spans) {
      Matrix& gp = gr.grad(id);
      gp += og.middleCols(start, gp.cols());
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols || p.graph != parts[0].graph) {
      throw std::invalid_argument("concat_rows: shape mismatch (" + shape(parts[0].value()) +
                                  ") vs (" + shape(p.value()) + ")");
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    spans.emplace_back(p.id, off);
    off += p.rows();
  }
  return parts[0].graph->record(std::move(out), [spans](Graph& gr, const Matrix& og) {
    for (const auto& [id, start] : spans) {
      Matrix& gp = gr.grad(id);
      gp += og.middleRows(start, gp.rows());
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::invalid_argument("slice_cols: [" + std::to_string(start) + ", +" +
                                std::to_string(count) + ") outside (" + shape(a.value()) + ")");
  }
  const int ia = a.id;
  return a.graph->record(a.value().middleCols(start, count),
                         [ia, start, count](Graph& gr, const Matrix& og) {
                           gr.grad(ia).middleCols(start, count) += og;
                         });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw std::invalid_argument("slice_rows: [" + std::to_string(start) + ", +" +
                                std::to_string(count) + ") outside (" + shape(a.value()) + ")");
  }
  const int ia = a.id;
  return a.graph->record(a.value().middleRows(start, count),
                         [ia, start, count](Graph& gr, const Matrix& og) {
                           gr.grad(ia).middleRows(start, count) += og;
                         });
}

Var sum(Var a) {
  const int ia = a.id;
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.graph->record(std::move(out), [ia](Graph& gr, const Matrix& og) {
    gr.grad(ia).array() += og(0, 0);
  });
}

Var pick(Var a, std::span<const int> cols) {
  const Matrix& av = a.value();
  if (static_cast<Eigen::Index>(cols.size()) > av.rows()) {
    throw std::invalid_argument("pick: " + std::to_string(cols.size()) + " indices for (" +
                                shape(av) + ")");
  }
  Matrix out(static_cast<Eigen::Index>(cols.size()), 1);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] < 0 || cols[i] >= av.cols()) {
      throw std::invalid_argument("pick: column " + std::to_string(cols[i]) + " outside (" +
                                  shape(av) + ")");
    }
    out(static_cast<Eigen::Index>(i), 0) = av(static_cast<Eigen::Index>(i), cols[i]);
  }
  const int ia = a.id;
  std::vector<int> idx(cols.begin(), cols.end());
  return a.graph->record(std::move(out), [ia, idx](Graph& gr, const Matrix& og) {
    Matrix& ga = gr.grad(ia);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      ga(static_cast<Eigen::Index>(i), idx[i]) += og(static_cast<Eigen::Index>(i), 0);
    }
  });
}

Var linear(Var x, Var weight, Var bias) {
  if (x.cols() != weight.rows() || bias.rows() != 1 || bias.cols() != weight.cols()) {
    shape_error("linear", {x, weight, bias});
  }
  return add_row(matmul(x, weight), bias);
}

Var scaled_dot(Var q, Var k, double s) {
  if (q.cols() != k.cols()) shape_error("scaled_dot", {q, k});
  return scale(matmul_nt(q, k), s);
}

LstmState lstm_cell(Var x, LstmState prev, Var w_x, Var w_h, Var b) {
  const Eigen::Index hidden = prev.h.cols();
  if (x.rows() != prev.h.rows() || prev.c.rows() != prev.h.rows() || prev.c.cols() != hidden ||
      w_x.rows() != x.cols() || w_x.cols() != 4 * hidden || w_h.rows() != hidden ||
      w_h.cols() != 4 * hidden || b.cols() != 4 * hidden) {
    shape_error("lstm_cell", {x, prev.h, prev.c, w_x, w_h, b});
  }
  Var gates = add_row(add(matmul(x, w_x), matmul(prev.h, w_h)), b);
  Var in = sigmoid(slice_cols(gates, 0, hidden));
  Var forget = sigmoid(slice_cols(gates, hidden, hidden));
  Var cand = tanh(slice_cols(gates, 2 * hidden, hidden));
  Var out = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  Var c = add(mul(forget, prev.c), mul(in, cand));
  Var h = mul(out, tanh(c));
  return {h, c};
}

Var forward_primitive(Primitive kind, std::span<const Var> in) {
  auto need = [&](std::size_t n, const char* name) {
    if (in.size() != n) {
      throw std::invalid_argument(std::string(name) + ": expected " + std::to_string(n) +
                                  " inputs, got " + std::to_string(in.size()));
    }
  };
  switch (kind) {
    case Primitive::kLinear:
      need(3, "linear");
      return linear(in[0], in[1], in[2]);
    case Primitive::kSoftmaxRow:
      need(1, "softmax_row");
      return softmax_rows(in[0]);
    case Primitive::kLogSoftmaxRow:
      need(1, "log_softmax_row");
      return log_softmax_rows(in[0]);
    case Primitive::kLayerNorm:
      need(3, "layer_norm");
      return layer_norm(in[0], in[1], in[2]);
    case Primitive::kAdd:
      need(2, "add");
      return add(in[0], in[1]);
    case Primitive::kConcat:
      return concat_cols(in);
    case Primitive::kScaledDot:
      need(2, "scaled_dot");
      return scaled_dot(in[0], in[1], 1.0 / std::sqrt(double(in[0].cols())));
  }
  throw std::invalid_argument("forward_primitive: unknown kind");
}

}  // namespace cba::nn
