// Copyright (c) 2026 The vtrig Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vtrig/autodiff.h"

#include <algorithm>
#include <unordered_set>

namespace vtrig {
namespace ad {

namespace {

thread_local bool g_grad_enabled = true;

Var MakeNode(Mat value) {
  Var n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

// Wires a result node to its inputs unless gradients are disabled or no
// input needs them.  The closure must only be read when requires_grad holds.
void Wire(const Var& out, std::vector<Var> inputs, std::function<void()> fn) {
  if (!g_grad_enabled) return;
  bool needs = false;
  for (const Var& v : inputs) needs = needs || v->requires_grad;
  if (!needs) return;
  out->requires_grad = true;
  out->parents = std::move(inputs);
  out->backward = std::move(fn);
}

void CheckSameShape(const Var& a, const Var& b, const char* op) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

NoGradScope::NoGradScope() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradScope::~NoGradScope() { g_grad_enabled = saved_; }

bool GradEnabled() { return g_grad_enabled; }

Var Leaf(Mat value, bool requires_grad) {
  Var n = MakeNode(std::move(value));
  n->requires_grad = requires_grad && g_grad_enabled;
  return n;
}

Var Constant(Mat value) { return Leaf(std::move(value), false); }

Var Add(Var a, Var b) {
  CheckSameShape(a, b, "Add");
  Var out = MakeNode(a->value + b->value);
  Node* o = out.get();
  Wire(out, {a, b}, [a, b, o]() {
    a->AccumGrad(o->grad);
    b->AccumGrad(o->grad);
  });
  return out;
}

Var Sub(Var a, Var b) {
  CheckSameShape(a, b, "Sub");
  Var out = MakeNode(a->value - b->value);
  Node* o = out.get();
  Wire(out, {a, b}, [a, b, o]() {
    a->AccumGrad(o->grad);
    b->AccumGrad(-o->grad);
  });
  return out;
}

Var AddRowVec(Var a, Var row) {
  if (row->value.rows() != 1 || row->value.cols() != a->value.cols()) {
    throw std::invalid_argument("AddRowVec: row must be 1 x cols(a)");
  }
  Var out = MakeNode(a->value.rowwise() + row->value.row(0));
  Node* o = out.get();
  Wire(out, {a, row}, [a, row, o]() {
    a->AccumGrad(o->grad);
    row->AccumGrad(o->grad.colwise().sum());
  });
  return out;
}

Var CMul(Var a, Var b) {
  CheckSameShape(a, b, "CMul");
  Var out = MakeNode(a->value.cwiseProduct(b->value));
  Node* o = out.get();
  Wire(out, {a, b}, [a, b, o]() {
    a->AccumGrad(o->grad.cwiseProduct(b->value));
    b->AccumGrad(o->grad.cwiseProduct(a->value));
  });
  return out;
}

Var Scale(Var a, double c) {
  Var out = MakeNode(a->value * c);
  Node* o = out.get();
  Wire(out, {a}, [a, c, o]() { a->AccumGrad(o->grad * c); });
  return out;
}

Var AddConst(Var a, const Mat& c) {
  if (a->value.rows() != c.rows() || a->value.cols() != c.cols()) {
    throw std::invalid_argument("AddConst: shape mismatch");
  }
  Var out = MakeNode(a->value + c);
  Node* o = out.get();
  Wire(out, {a}, [a, o]() { a->AccumGrad(o->grad); });
  return out;
}

Var MatMul(Var a, Var b) {
  if (a->value.cols() != b->value.rows()) {
    throw std::invalid_argument("MatMul: inner dimension mismatch");
  }
  Var out = MakeNode(a->value * b->value);
  Node* o = out.get();
  Wire(out, {a, b}, [a, b, o]() {
    a->AccumGrad(o->grad * b->value.transpose());
    b->AccumGrad(a->value.transpose() * o->grad);
  });
  return out;
}

Var Transpose(Var a) {
  Var out = MakeNode(a->value.transpose());
  Node* o = out.get();
  Wire(out, {a}, [a, o]() { a->AccumGrad(o->grad.transpose()); });
  return out;
}

Var Relu(Var a) {
  Var out = MakeNode(a->value.cwiseMax(0.0));
  Node* o = out.get();
  Wire(out, {a}, [a, o]() {
    Mat mask = (a->value.array() > 0.0).cast<double>();
    a->AccumGrad(o->grad.cwiseProduct(mask));
  });
  return out;
}

Var RowSoftmax(Var a) {
  Mat y = a->value;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  Var out = MakeNode(std::move(y));
  Node* o = out.get();
  Wire(out, {a}, [a, o]() {
    Mat dx(o->value.rows(), o->value.cols());
    for (Eigen::Index r = 0; r < o->value.rows(); ++r) {
      double dot = o->grad.row(r).cwiseProduct(o->value.row(r)).sum();
      dx.row(r) =
          o->value.row(r).array() * (o->grad.row(r).array() - dot);
    }
    a->AccumGrad(dx);
  });
  return out;
}

Var RowLogSoftmax(Var a) {
  Mat y = a->value;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    double m = y.row(r).maxCoeff();
    double lse = m + std::log((y.row(r).array() - m).exp().sum());
    y.row(r) = y.row(r).array() - lse;
  }
  Var out = MakeNode(std::move(y));
  Node* o = out.get();
  Wire(out, {a}, [a, o]() {
    Mat dx(o->value.rows(), o->value.cols());
    for (Eigen::Index r = 0; r < o->value.rows(); ++r) {
      double gsum = o->grad.row(r).sum();
      dx.row(r) = o->grad.row(r) - gsum * o->value.row(r).array().exp().matrix();
    }
    a->AccumGrad(dx);
  });
  return out;
}

Var LayerNorm(Var x, Var gain, Var bias, double eps) {
  const Eigen::Index cols = x->value.cols();
  if (gain->value.rows() != 1 || gain->value.cols() != cols ||
      bias->value.rows() != 1 || bias->value.cols() != cols) {
    throw std::invalid_argument("LayerNorm: gain/bias must be 1 x cols(x)");
  }
  Mat xhat(x->value.rows(), cols);
  Vec inv_sigma(x->value.rows());
  for (Eigen::Index r = 0; r < x->value.rows(); ++r) {
    double mu = x->value.row(r).mean();
    double var = (x->value.row(r).array() - mu).square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    inv_sigma(r) = is;
    xhat.row(r) = (x->value.row(r).array() - mu) * is;
  }
  Mat y = (xhat.array().rowwise() * gain->value.row(0).array()).rowwise() +
          bias->value.row(0).array();
  Var out = MakeNode(std::move(y));
  Node* o = out.get();
  // xhat and inv_sigma are captured for the backward pass.
  Wire(out, {x, gain, bias}, [x, gain, bias, o, xhat, inv_sigma]() {
    const Mat& g = o->grad;
    Mat dy = g.array().rowwise() * gain->value.row(0).array();
    Mat dx(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      double mean_dy = dy.row(r).mean();
      double mean_dy_xhat = dy.row(r).cwiseProduct(xhat.row(r)).mean();
      dx.row(r) = inv_sigma(r) *
                  (dy.row(r).array() - mean_dy - xhat.row(r).array() * mean_dy_xhat);
    }
    x->AccumGrad(dx);
    gain->AccumGrad(g.cwiseProduct(xhat).colwise().sum());
    bias->AccumGrad(g.colwise().sum());
  });
  return out;
}

Var SliceCols(Var a, int col0, int width) {
  if (col0 < 0 || width <= 0 || col0 + width > a->value.cols()) {
    throw std::invalid_argument("SliceCols: range out of bounds");
  }
  Var out = MakeNode(a->value.middleCols(col0, width));
  Node* o = out.get();
  Wire(out, {a}, [a, col0, width, o]() {
    Mat dx = Mat::Zero(a->value.rows(), a->value.cols());
    dx.middleCols(col0, width) = o->grad;
    a->AccumGrad(dx);
  });
  return out;
}

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: empty input");
  Eigen::Index rows = parts[0]->value.rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p->value.rows() != rows) {
      throw std::invalid_argument("ConcatCols: row count mismatch");
    }
    cols += p->value.cols();
  }
  Mat y(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    y.middleCols(at, p->value.cols()) = p->value;
    at += p->value.cols();
  }
  Var out = MakeNode(std::move(y));
  Node* o = out.get();
  Wire(out, parts, [parts, o]() {
    Eigen::Index at = 0;
    for (const Var& p : parts) {
      p->AccumGrad(o->grad.middleCols(at, p->value.cols()));
      at += p->value.cols();
    }
  });
  return out;
}

Var Reshape(Var a, int rows, int cols) {
  if (static_cast<Eigen::Index>(rows) * cols != a->value.size()) {
    throw std::invalid_argument("Reshape: element count mismatch");
  }
  // Eigen is column-major; go through a row-major copy so the reshape reads
  // row by row.
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor rm = a->value;
  Mat y = Eigen::Map<RowMajor>(rm.data(), rows, cols);
  Var out = MakeNode(std::move(y));
  Node* o = out.get();
  Wire(out, {a}, [a, o]() {
    RowMajor gm = o->grad;
    Mat dx = Eigen::Map<RowMajor>(gm.data(), a->value.rows(), a->value.cols());
    a->AccumGrad(dx);
  });
  return out;
}

Var Sum(Var a) {
  Mat y(1, 1);
  y(0, 0) = a->value.sum();
  Var out = MakeNode(std::move(y));
  Node* o = out.get();
  Wire(out, {a}, [a, o]() {
    a->AccumGrad(Mat::Constant(a->value.rows(), a->value.cols(), o->grad(0, 0)));
  });
  return out;
}

Var Mean(Var a) {
  double inv = 1.0 / static_cast<double>(a->value.size());
  Mat y(1, 1);
  y(0, 0) = a->value.sum() * inv;
  Var out = MakeNode(std::move(y));
  Node* o = out.get();
  Wire(out, {a}, [a, inv, o]() {
    a->AccumGrad(
        Mat::Constant(a->value.rows(), a->value.cols(), o->grad(0, 0) * inv));
  });
  return out;
}

Var Dot(Var a, Var b) {
  CheckSameShape(a, b, "Dot");
  Mat y(1, 1);
  y(0, 0) = a->value.cwiseProduct(b->value).sum();
  Var out = MakeNode(std::move(y));
  Node* o = out.get();
  Wire(out, {a, b}, [a, b, o]() {
    a->AccumGrad(o->grad(0, 0) * b->value);
    b->AccumGrad(o->grad(0, 0) * a->value);
  });
  return out;
}

Var SigmoidCrossEntropy(Var logit, int label) {
  if (logit->value.size() != 1) {
    throw std::invalid_argument("SigmoidCrossEntropy: logit must be 1 x 1");
  }
  if (label != 0 && label != 1) {
    throw std::invalid_argument("SigmoidCrossEntropy: label must be 0 or 1");
  }
  double z = logit->value(0, 0);
  // max(z, 0) - z * y + log(1 + exp(-|z|))
  double loss = std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
  Mat y(1, 1);
  y(0, 0) = loss;
  Var out = MakeNode(std::move(y));
  Node* o = out.get();
  Wire(out, {logit}, [logit, label, o]() {
    double z = logit->value(0, 0);
    double sig = 1.0 / (1.0 + std::exp(-z));
    Mat dz(1, 1);
    dz(0, 0) = (sig - label) * o->grad(0, 0);
    logit->AccumGrad(dz);
  });
  return out;
}

Var SoftmaxCrossEntropy(Var logits, int target) {
  if (logits->value.rows() != 1) {
    throw std::invalid_argument("SoftmaxCrossEntropy: logits must be 1 x K");
  }
  if (target < 0 || target >= logits->value.cols()) {
    throw std::invalid_argument("SoftmaxCrossEntropy: target out of range");
  }
  const Mat& z = logits->value;
  double m = z.maxCoeff();
  double lse = m + std::log((z.array() - m).exp().sum());
  Mat y(1, 1);
  y(0, 0) = lse - z(0, target);
  Var out = MakeNode(std::move(y));
  Node* o = out.get();
  Wire(out, {logits}, [logits, target, o]() {
    const Mat& z = logits->value;
    double m = z.maxCoeff();
    Mat p = (z.array() - m).exp();
    p /= p.sum();
    p(0, target) -= 1.0;
    logits->AccumGrad(p * o->grad(0, 0));
  });
  return out;
}

void Backward(const Var& root) {
  if (root->value.size() != 1) {
    throw std::invalid_argument("Backward: root must be scalar");
  }
  if (!root->requires_grad) return;

  // Iterative post-order DFS; reversed post-order is a valid execution order
  // for the adjoint pass.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (p->requires_grad && visited.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->AccumGrad(Mat::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->has_grad()) n->backward();
  }
}

}  // namespace ad
}  // namespace vtrig
