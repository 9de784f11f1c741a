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

#include "asrkit/autograd.hpp"

#include <cmath>

#include "asrkit/error.hpp"

namespace asrkit::autograd {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::InvalidArgument, what);
}

Eigen::Index conv_out_len(Eigen::Index t, int kernel, int stride, int padding) {
  const Eigen::Index padded = t + 2 * padding;
  if (padded < kernel) return 0;
  return (padded - kernel) / stride + 1;
}

// Rows of the padded input gathered for one group: out(t, k * cg + c).
Matrix im2col(const Matrix& x, int kernel, int stride, int padding, Eigen::Index group_offset, Eigen::Index cg,
              Eigen::Index t_out) {
  Matrix col = Matrix::Zero(t_out, kernel * cg);
  for (Eigen::Index t = 0; t < t_out; ++t) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = t * stride + k - padding;
      if (src < 0 || src >= x.rows()) continue;
      col.block(t, k * cg, 1, cg) = x.block(src, group_offset, 1, cg);
    }
  }
  return col;
}

}  // namespace

Graph::Id Graph::push(Matrix value, bool requires_grad, std::function<void(Graph&)> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

bool Graph::any_grad(std::initializer_list<Id> ids) const {
  for (Id id : ids) {
    if (requires_grad(id)) return true;
  }
  return false;
}

void Graph::accumulate(Id id, const Matrix& g) { accumulate_expr(id, g); }

template <typename Expr>
void Graph::accumulate_expr(Id id, const Expr& g) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Graph::Id Graph::leaf(Matrix value, bool requires_grad) { return push(std::move(value), requires_grad, nullptr); }

Graph::Id Graph::matmul(Id a, Id b) {
  require(value(a).cols() == value(b).rows(), "matmul shape mismatch");
  const Id out = static_cast<Id>(nodes_.size());
  Matrix v = value(a) * value(b);
  return push(std::move(v), any_grad({a, b}), [a, b, out](Graph& g) {
    const Matrix& d = g.grad(out);
    if (g.requires_grad(a)) g.accumulate_expr(a, d * g.value(b).transpose());
    if (g.requires_grad(b)) g.accumulate_expr(b, g.value(a).transpose() * d);
  });
}

Graph::Id Graph::matmul_transposed(Id a, Id b) {
  require(value(a).cols() == value(b).cols(), "matmul_transposed shape mismatch");
  const Id out = static_cast<Id>(nodes_.size());
  Matrix v = value(a) * value(b).transpose();
  return push(std::move(v), any_grad({a, b}), [a, b, out](Graph& g) {
    const Matrix& d = g.grad(out);
    if (g.requires_grad(a)) g.accumulate_expr(a, d * g.value(b));
    if (g.requires_grad(b)) g.accumulate_expr(b, d.transpose() * g.value(a));
  });
}

Graph::Id Graph::add(Id a, Id b) {
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add shape mismatch");
  const Id out = static_cast<Id>(nodes_.size());
  Matrix v = value(a) + value(b);
  return push(std::move(v), any_grad({a, b}), [a, b, out](Graph& g) {
    g.accumulate(a, g.grad(out));
    g.accumulate(b, g.grad(out));
  });
}

Graph::Id Graph::add_row(Id x, Id row) {
  require(value(row).rows() == 1 && value(row).cols() == value(x).cols(), "add_row shape mismatch");
  const Id out = static_cast<Id>(nodes_.size());
  Matrix v = value(x).rowwise() + value(row).row(0);
  return push(std::move(v), any_grad({x, row}), [x, row, out](Graph& g) {
    g.accumulate(x, g.grad(out));
    if (g.requires_grad(row)) g.accumulate_expr(row, g.grad(out).colwise().sum());
  });
}

Graph::Id Graph::scale(Id x, double s) {
  const Id out = static_cast<Id>(nodes_.size());
  Matrix v = value(x) * s;
  return push(std::move(v), requires_grad(x), [x, s, out](Graph& g) { g.accumulate_expr(x, g.grad(out) * s); });
}

Graph::Id Graph::gelu(Id x) {
  const Id out = static_cast<Id>(nodes_.size());
  const Matrix& in = value(x);
  Matrix v = in.unaryExpr([](double z) { return 0.5 * z * (1.0 + std::erf(z * kInvSqrt2)); });
  return push(std::move(v), requires_grad(x), [x, out](Graph& g) {
    Matrix d = g.value(x).unaryExpr([](double z) {
      return 0.5 * (1.0 + std::erf(z * kInvSqrt2)) + z * kInvSqrt2Pi * std::exp(-0.5 * z * z);
    });
    g.accumulate_expr(x, d.cwiseProduct(g.grad(out)));
  });
}

Graph::Id Graph::layer_norm(Id x, Id gain, Id bias, double eps) {
  const Matrix& in = value(x);
  const Eigen::Index n = in.cols();
  require(value(gain).rows() == 1 && value(gain).cols() == n, "layer_norm gain shape");
  require(value(bias).rows() == 1 && value(bias).cols() == n, "layer_norm bias shape");
  Matrix xhat(in.rows(), n);
  Eigen::VectorXd inv_std(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mean = in.row(r).mean();
    const double var = (in.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (in.row(r).array() - mean) * inv_std(r);
  }
  Matrix v = (xhat.array().rowwise() * value(gain).row(0).array()).rowwise() + value(bias).row(0).array();
  const Id out = static_cast<Id>(nodes_.size());
  return push(std::move(v), any_grad({x, gain, bias}),
              [x, gain, bias, out, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g) {
                const Matrix& d = g.grad(out);
                if (g.requires_grad(gain)) g.accumulate_expr(gain, d.cwiseProduct(xhat).colwise().sum());
                if (g.requires_grad(bias)) g.accumulate_expr(bias, d.colwise().sum());
                if (!g.requires_grad(x)) return;
                const Matrix dxhat = d.array().rowwise() * g.value(gain).row(0).array();
                Matrix dx(d.rows(), d.cols());
                for (Eigen::Index r = 0; r < d.rows(); ++r) {
                  const double m1 = dxhat.row(r).mean();
                  const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                  dx.row(r) = (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r);
                }
                g.accumulate(x, dx);
              });
}

Graph::Id Graph::softmax_rows(Id x) {
  const Matrix& in = value(x);
  Matrix v(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double m = in.row(r).maxCoeff();
    v.row(r) = (in.row(r).array() - m).exp();
    v.row(r) /= v.row(r).sum();
  }
  const Id out = static_cast<Id>(nodes_.size());
  return push(std::move(v), requires_grad(x), [x, out](Graph& g) {
    const Matrix& y = g.value(out);
    const Matrix& d = g.grad(out);
    const Eigen::VectorXd dot = d.cwiseProduct(y).rowwise().sum();
    g.accumulate_expr(x, y.cwiseProduct((d.colwise() - dot)));
  });
}

Graph::Id Graph::log_softmax_rows(Id x) {
  Matrix v = asrkit::log_softmax_rows(value(x));
  const Id out = static_cast<Id>(nodes_.size());
  return push(std::move(v), requires_grad(x), [x, out](Graph& g) {
    const Matrix p = g.value(out).array().exp();
    const Matrix& d = g.grad(out);
    const Eigen::VectorXd total = d.rowwise().sum();
    g.accumulate_expr(x, d - (p.array().colwise() * total.array()).matrix());
  });
}

Graph::Id Graph::slice_cols(Id x, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= value(x).cols(), "slice_cols out of range");
  const Id out = static_cast<Id>(nodes_.size());
  Matrix v = value(x).middleCols(start, count);
  return push(std::move(v), requires_grad(x), [x, start, count, out](Graph& g) {
    Matrix d = Matrix::Zero(g.value(x).rows(), g.value(x).cols());
    d.middleCols(start, count) = g.grad(out);
    g.accumulate(x, d);
  });
}

Graph::Id Graph::concat_cols(const std::vector<Id>& parts) {
  require(!parts.empty(), "concat_cols needs parts");
  Eigen::Index cols = 0;
  const Eigen::Index rows = value(parts.front()).rows();
  bool grad = false;
  for (Id p : parts) {
    require(value(p).rows() == rows, "concat_cols row mismatch");
    cols += value(p).cols();
    grad = grad || requires_grad(p);
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  for (Id p : parts) {
    v.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  const Id out = static_cast<Id>(nodes_.size());
  return push(std::move(v), grad, [parts, out](Graph& g) {
    Eigen::Index offset = 0;
    for (Id p : parts) {
      const auto w = g.value(p).cols();
      if (g.requires_grad(p)) g.accumulate_expr(p, g.grad(out).middleCols(offset, w));
      offset += w;
    }
  });
}

Graph::Id Graph::conv1d(Id x, Id weight, Id bias, int kernel, int stride, int padding, int groups) {
  const Matrix& in = value(x);
  const Matrix& w = value(weight);
  require(kernel >= 1 && stride >= 1 && padding >= 0 && groups >= 1, "conv1d parameters");
  require(in.cols() % groups == 0 && w.cols() % groups == 0, "conv1d channels not divisible by groups");
  const Eigen::Index cg = in.cols() / groups;
  const Eigen::Index og = w.cols() / groups;
  require(w.rows() == kernel * cg, "conv1d weight shape");
  require(value(bias).rows() == 1 && value(bias).cols() == w.cols(), "conv1d bias shape");
  const Eigen::Index t_out = conv_out_len(in.rows(), kernel, stride, padding);
  require(t_out > 0, "conv1d input shorter than kernel");

  Matrix v(t_out, w.cols());
  for (int gi = 0; gi < groups; ++gi) {
    const Matrix col = im2col(in, kernel, stride, padding, gi * cg, cg, t_out);
    v.middleCols(gi * og, og).noalias() = col * w.middleCols(gi * og, og);
  }
  v.rowwise() += value(bias).row(0);

  const Id out = static_cast<Id>(nodes_.size());
  return push(std::move(v), any_grad({x, weight, bias}),
              [x, weight, bias, kernel, stride, padding, groups, cg, og, t_out, out](Graph& g) {
                const Matrix& d = g.grad(out);
                const Matrix& in = g.value(x);
                const Matrix& w = g.value(weight);
                if (g.requires_grad(bias)) g.accumulate_expr(bias, d.colwise().sum());
                Matrix dw;
                if (g.requires_grad(weight)) dw = Matrix::Zero(w.rows(), w.cols());
                Matrix dx;
                if (g.requires_grad(x)) dx = Matrix::Zero(in.rows(), in.cols());
                for (int gi = 0; gi < groups; ++gi) {
                  const auto dblock = d.middleCols(gi * og, og);
                  if (dw.size() > 0) {
                    const Matrix col = im2col(in, kernel, stride, padding, gi * cg, cg, t_out);
                    dw.middleCols(gi * og, og).noalias() = col.transpose() * dblock;
                  }
                  if (dx.size() > 0) {
                    const Matrix dcol = dblock * w.middleCols(gi * og, og).transpose();
                    for (Eigen::Index t = 0; t < t_out; ++t) {
                      for (int k = 0; k < kernel; ++k) {
                        const Eigen::Index src = t * stride + k - padding;
                        if (src < 0 || src >= in.rows()) continue;
                        dx.block(src, gi * cg, 1, cg) += dcol.block(t, k * cg, 1, cg);
                      }
                    }
                  }
                }
                if (dw.size() > 0) g.accumulate(weight, dw);
                if (dx.size() > 0) g.accumulate(x, dx);
              });
}

Graph::Id Graph::replace_rows(Id x, Id row, const std::vector<bool>& mask) {
  require(static_cast<Eigen::Index>(mask.size()) == value(x).rows(), "replace_rows mask length");
  require(value(row).rows() == 1 && value(row).cols() == value(x).cols(), "replace_rows row shape");
  Matrix v = value(x);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    if (mask[static_cast<std::size_t>(r)]) v.row(r) = value(row).row(0);
  }
  const Id out = static_cast<Id>(nodes_.size());
  return push(std::move(v), any_grad({x, row}), [x, row, mask, out](Graph& g) {
    Matrix d = g.grad(out);
    RowVector drow = RowVector::Zero(d.cols());
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      if (mask[static_cast<std::size_t>(r)]) {
        drow += d.row(r);
        d.row(r).setZero();
      }
    }
    g.accumulate(x, d);
    if (g.requires_grad(row)) g.accumulate_expr(row, drow);
  });
}

Graph::Id Graph::zero_cols(Id x, const std::vector<bool>& mask) {
  require(static_cast<Eigen::Index>(mask.size()) == value(x).cols(), "zero_cols mask length");
  Matrix v = value(x);
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    if (mask[static_cast<std::size_t>(c)]) v.col(c).setZero();
  }
  const Id out = static_cast<Id>(nodes_.size());
  return push(std::move(v), requires_grad(x), [x, mask, out](Graph& g) {
    Matrix d = g.grad(out);
    for (Eigen::Index c = 0; c < d.cols(); ++c) {
      if (mask[static_cast<std::size_t>(c)]) d.col(c).setZero();
    }
    g.accumulate(x, d);
  });
}

void Graph::backward(const std::vector<std::pair<Id, Matrix>>& seeds) {
  for (const auto& [id, seed] : seeds) {
    require(seed.rows() == value(id).rows() && seed.cols() == value(id).cols(), "backward seed shape");
    accumulate(id, seed);
  }
  for (auto i = static_cast<std::ptrdiff_t>(nodes_.size()) - 1; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this);
  }
}

}  // namespace asrkit::autograd
