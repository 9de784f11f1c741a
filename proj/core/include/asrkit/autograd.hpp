// Copyright 2026 The asrkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "asrkit/matrix.hpp"

namespace asrkit::autograd {

/// Reverse-mode tape over row-major matrices. Nodes are created in
/// topological order, so backward is a single reverse sweep.
class Graph {
 public:
  using Id = int;

  Id leaf(Matrix value, bool requires_grad = true);

  const Matrix& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  /// Zero-sized until backward reaches the node.
  const Matrix& grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool requires_grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Id matmul(Id a, Id b);
  Id matmul_transposed(Id a, Id b);  // a * b^T
  Id add(Id a, Id b);
  Id add_row(Id x, Id row);  // broadcast a 1 x n row over every row of x
  Id scale(Id x, double s);
  Id gelu(Id x);
  /// Per-row normalization with 1 x n gain and bias.
  Id layer_norm(Id x, Id gain, Id bias, double eps = 1e-5);
  Id softmax_rows(Id x);
  Id log_softmax_rows(Id x);
  Id slice_cols(Id x, Eigen::Index start, Eigen::Index count);
  Id concat_cols(const std::vector<Id>& parts);
  /// x: T x (in) frames, weight: (kernel * in / groups) x out with row index
  /// k * (in / groups) + c, bias 1 x out. Zero padding on both sides.
  Id conv1d(Id x, Id weight, Id bias, int kernel, int stride, int padding, int groups);
  /// Rows flagged in `mask` are replaced by the 1 x n `row`.
  Id replace_rows(Id x, Id row, const std::vector<bool>& mask);
  /// Columns flagged in `mask` are zeroed.
  Id zero_cols(Id x, const std::vector<bool>& mask);

  /// Accumulates the given output gradients and sweeps the tape once.
  void backward(const std::vector<std::pair<Id, Matrix>>& seeds);
  void backward(Id out, const Matrix& seed) { backward({{out, seed}}); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void(Graph&)> backward;
  };

  Id push(Matrix value, bool requires_grad, std::function<void(Graph&)> backward);
  bool any_grad(std::initializer_list<Id> ids) const;
  void accumulate(Id id, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(Id id, const Expr& g);

  std::vector<Node> nodes_;
};

}  // namespace asrkit::autograd
