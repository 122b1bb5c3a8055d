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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "vtrig/autodiff.h"
#include "vtrig/losses.h"

namespace vtrig {
namespace {

Mat RandomMat(int r, int c, Rng* rng) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = rng->Gaussian();
  }
  return m;
}

// Central-difference gradient of a scalar graph with respect to one leaf.
Mat NumericGrad(const std::function<double()>& f, const ad::Var& leaf,
                double h = 1e-6) {
  Mat g(leaf->value.rows(), leaf->value.cols());
  for (int i = 0; i < leaf->value.rows(); ++i) {
    for (int j = 0; j < leaf->value.cols(); ++j) {
      const double v0 = leaf->value(i, j);
      leaf->value(i, j) = v0 + h;
      const double up = f();
      leaf->value(i, j) = v0 - h;
      const double down = f();
      leaf->value(i, j) = v0;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

double MaxRelErr(const Mat& a, const Mat& b) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      const double denom =
          std::max({std::abs(a(i, j)), std::abs(b(i, j)), 1e-6});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
    }
  }
  return worst;
}

TEST_CASE("affine map gradients are exact to first order") {
  Rng rng(1);
  ad::Var w = ad::Leaf(RandomMat(4, 3, &rng), true);
  ad::Var x = ad::Leaf(RandomMat(2, 4, &rng), true);
  ad::Var b = ad::Leaf(RandomMat(1, 3, &rng), true);
  auto build = [&] {
    return ad::Sum(ad::AddRowVec(ad::MatMul(x, w), b));
  };
  ad::Var root = build();
  ad::Backward(root);
  // d(sum(xw + b))/dw = x^T 1, closed form; the tape must match it exactly.
  Mat expect_w = x->value.transpose() * Mat::Ones(2, 3);
  Mat expect_x = Mat::Ones(2, 3) * w->value.transpose();
  CHECK((w->grad - expect_w).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((x->grad - expect_x).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((b->grad - Mat::Constant(1, 3, 2.0)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("every elementwise and shape op matches finite differences") {
  Rng rng(2);
  ad::Var a = ad::Leaf(RandomMat(3, 4, &rng), true);
  ad::Var b = ad::Leaf(RandomMat(3, 4, &rng), true);
  ad::Var row = ad::Leaf(RandomMat(1, 4, &rng), true);

  struct Case {
    const char* name;
    std::function<ad::Var()> build;
  };
  const std::vector<Case> cases = {
      {"add", [&] { return ad::Sum(ad::Add(a, b)); }},
      {"sub", [&] { return ad::Sum(ad::Sub(a, b)); }},
      {"cmul", [&] { return ad::Sum(ad::CMul(a, b)); }},
      {"scale", [&] { return ad::Sum(ad::Scale(a, -2.5)); }},
      {"addrow", [&] { return ad::Sum(ad::CMul(ad::AddRowVec(a, row), b)); }},
      {"relu", [&] { return ad::Sum(ad::CMul(ad::Relu(a), b)); }},
      {"softmax", [&] { return ad::Sum(ad::CMul(ad::RowSoftmax(a), b)); }},
      {"logsoftmax",
       [&] { return ad::Sum(ad::CMul(ad::RowLogSoftmax(a), b)); }},
      {"slice", [&] { return ad::Sum(ad::SliceCols(a, 1, 2)); }},
      {"reshape",
       [&] { return ad::Sum(ad::CMul(ad::Reshape(a, 2, 6),
                                     ad::Constant(Mat::Ones(2, 6)))); }},
      {"concat",
       [&] { return ad::Sum(ad::CMul(ad::ConcatCols({a, b}),
                                     ad::Constant(Mat::Ones(3, 8)))); }},
      {"mean", [&] { return ad::Mean(ad::CMul(a, b)); }},
      {"dot", [&] { return ad::Dot(a, b); }},
      {"transpose",
       [&] { return ad::Sum(ad::MatMul(ad::Transpose(a), b)); }},
  };
  for (const Case& c : cases) {
    INFO("op ", c.name);
    a->ZeroGrad();
    b->ZeroGrad();
    row->ZeroGrad();
    ad::Var root = c.build();
    ad::Backward(root);
    auto value = [&] { return c.build()->value(0, 0); };
    if (a->has_grad()) {
      CHECK(MaxRelErr(a->grad, NumericGrad(value, a)) < 1e-6);
    }
    if (b->has_grad()) {
      CHECK(MaxRelErr(b->grad, NumericGrad(value, b)) < 1e-6);
    }
    if (row->has_grad()) {
      CHECK(MaxRelErr(row->grad, NumericGrad(value, row)) < 1e-6);
    }
  }
}

TEST_CASE("layer norm gradients pass finite differences") {
  Rng rng(3);
  ad::Var x = ad::Leaf(RandomMat(3, 5, &rng), true);
  ad::Var gain = ad::Leaf(RandomMat(1, 5, &rng), true);
  ad::Var bias = ad::Leaf(RandomMat(1, 5, &rng), true);
  Mat probe = RandomMat(3, 5, &rng);
  auto build = [&] {
    return ad::Dot(ad::LayerNorm(x, gain, bias), ad::Constant(probe));
  };
  ad::Var root = build();
  ad::Backward(root);
  auto value = [&] { return build()->value(0, 0); };
  CHECK(MaxRelErr(x->grad, NumericGrad(value, x)) < 1e-5);
  CHECK(MaxRelErr(gain->grad, NumericGrad(value, gain)) < 1e-5);
  CHECK(MaxRelErr(bias->grad, NumericGrad(value, bias)) < 1e-5);
}

TEST_CASE("layer norm output has zero mean and unit variance per row") {
  Rng rng(4);
  ad::Var x = ad::Leaf(RandomMat(4, 8, &rng), true);
  ad::Var gain = ad::Constant(Mat::Ones(1, 8));
  ad::Var bias = ad::Constant(Mat::Zero(1, 8));
  ad::Var y = ad::LayerNorm(x, gain, bias);
  for (int r = 0; r < 4; ++r) {
    CHECK(y->value.row(r).mean() == doctest::Approx(0.0).epsilon(1e-9));
    const double var = y->value.row(r).squaredNorm() / 8.0;
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("fused binary cross entropy matches the scalar helper bitwise") {
  for (double z : {-40.0, -3.25, -1e-3, 0.0, 0.7, 5.0, 40.0}) {
    for (int label : {0, 1}) {
      ad::Var logit = ad::Leaf(Mat::Constant(1, 1, z), true);
      ad::Var loss = ad::SigmoidCrossEntropy(logit, label);
      CHECK(loss->value(0, 0) == PhraseCe(z, label));
      ad::Backward(loss);
      const double sig = 1.0 / (1.0 + std::exp(-z));
      CHECK(logit->grad(0, 0) ==
            doctest::Approx(sig - label).epsilon(1e-12));
    }
  }
}

TEST_CASE("fused softmax cross entropy matches the scalar helper bitwise") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Mat logits = RandomMat(1, 6, &rng) * 3.0;
    const int target = trial % 6;
    ad::Var l = ad::Leaf(logits, true);
    ad::Var loss = ad::SoftmaxCrossEntropy(l, target);
    CHECK(loss->value(0, 0) == SpeakerCe(logits.row(0).transpose(), target));
    ad::Backward(loss);
    // The exact adjoint is softmax(logits) minus the one-hot target.
    Mat shifted = (logits.array() - logits.maxCoeff()).exp();
    Mat expect = shifted / shifted.sum();
    expect(0, target) -= 1.0;
    CHECK(MaxRelErr(l->grad, expect) < 1e-12);
  }
}

TEST_CASE("adjoints accumulate across shared subexpressions") {
  ad::Var x = ad::Leaf(Mat::Constant(1, 1, 3.0), true);
  // y = x * x + x: dy/dx = 2x + 1 = 7 at x = 3.
  ad::Var y = ad::Add(ad::CMul(x, x), x);
  ad::Backward(y);
  CHECK(x->grad(0, 0) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("a no-grad scope produces value-only nodes") {
  ad::Var x = ad::Leaf(Mat::Constant(2, 2, 1.0), true);
  {
    ad::NoGradScope ng;
    CHECK_FALSE(ad::GradEnabled());
    ad::Var y = ad::Sum(ad::CMul(x, x));
    CHECK(y->value(0, 0) == 4.0);
    CHECK(y->parents.empty());
    CHECK_FALSE(y->requires_grad);
  }
  CHECK(ad::GradEnabled());
}

TEST_CASE("constants never accumulate gradient") {
  ad::Var c = ad::Constant(Mat::Constant(2, 2, 2.0));
  ad::Var x = ad::Leaf(Mat::Constant(2, 2, 1.0), true);
  ad::Var y = ad::Sum(ad::CMul(c, x));
  ad::Backward(y);
  CHECK_FALSE(c->has_grad());
  CHECK(x->grad == Mat::Constant(2, 2, 2.0));
}

TEST_CASE("backward rejects roots that are not scalars") {
  ad::Var x = ad::Leaf(Mat::Constant(2, 2, 1.0), true);
  CHECK_THROWS_AS(ad::Backward(ad::Scale(x, 2.0)), std::invalid_argument);
}

TEST_CASE("shape mismatches are rejected at build time") {
  ad::Var a = ad::Leaf(Mat::Zero(2, 3), true);
  ad::Var b = ad::Leaf(Mat::Zero(3, 2), true);
  CHECK_THROWS_AS(ad::Add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ad::Dot(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ad::Reshape(a, 4, 2), std::invalid_argument);
  CHECK_THROWS_AS(ad::SliceCols(a, 2, 5), std::invalid_argument);
}

}  // namespace
}  // namespace vtrig
