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

// Reverse-mode automatic differentiation on dense double matrices.  Each op
// builds a graph node holding the forward value and a closure that routes the
// incoming adjoint to the parents.  Graphs are built per utterance and freed
// when the last Var handle drops, so peak memory stays bounded by one graph.

#ifndef VTRIG_AUTODIFF_H_
#define VTRIG_AUTODIFF_H_

#include <functional>
#include <memory>
#include <vector>

#include "vtrig/common.h"

namespace vtrig {
namespace ad {

class Node;
using Var = std::shared_ptr<Node>;

class Node {
 public:
  Mat value;
  Mat grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void()> backward;

  bool has_grad() const { return grad.size() > 0; }

  void AccumGrad(const Mat& g) {
    if (!requires_grad) return;
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }

  void ZeroGrad() { grad.resize(0, 0); }
};

// While a NoGradScope is alive, ops compute values only: nodes carry no
// parents and no backward closures.  Used for the frozen-encoder forward and
// for loss-only evaluation (finite differences).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  bool saved_;
};

bool GradEnabled();

// Leaf creation.  Parameters use requires_grad = true; inputs and cached
// activations use Constant.
Var Leaf(Mat value, bool requires_grad);
Var Constant(Mat value);

Var Add(Var a, Var b);
Var Sub(Var a, Var b);
// Broadcasts a 1 x C row onto every row of a.
Var AddRowVec(Var a, Var row);
Var CMul(Var a, Var b);
Var Scale(Var a, double c);
// Adds a fixed matrix (no gradient through the constant).
Var AddConst(Var a, const Mat& c);
Var MatMul(Var a, Var b);
Var Transpose(Var a);
Var Relu(Var a);
Var RowSoftmax(Var a);
Var RowLogSoftmax(Var a);
// Per-row normalization over columns; gain and bias are 1 x C.
Var LayerNorm(Var x, Var gain, Var bias, double eps = 1e-5);
Var SliceCols(Var a, int col0, int width);
Var ConcatCols(const std::vector<Var>& parts);
// Row-major reshape (row r of the result reads the source row-wise).
Var Reshape(Var a, int rows, int cols);
Var Sum(Var a);   // 1 x 1
Var Mean(Var a);  // 1 x 1
// Frobenius inner product, 1 x 1.  Shapes must match.
Var Dot(Var a, Var b);

// -log sigmoid(z) for label 1, -log(1 - sigmoid(z)) for label 0, in a
// numerically stable fused form.  logit is 1 x 1.
Var SigmoidCrossEntropy(Var logit, int label);
// -log softmax(logits)[target]; logits is 1 x K.
Var SoftmaxCrossEntropy(Var logits, int target);

// Seeds the root (must be 1 x 1) with adjoint one and runs the tape in
// reverse topological order.
void Backward(const Var& root);

}  // namespace ad
}  // namespace vtrig

#endif  // VTRIG_AUTODIFF_H_
