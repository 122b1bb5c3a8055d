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

#ifndef VTRIG_CTC_H_
#define VTRIG_CTC_H_

#include <vector>

#include "vtrig/autodiff.h"
#include "vtrig/common.h"

namespace vtrig {

// Thrown when no monotonic alignment of the label sequence fits in the given
// number of frames (repeated labels need a separating blank).
class CtcUnalignableError : public std::invalid_argument {
 public:
  explicit CtcUnalignableError(const std::string& msg)
      : std::invalid_argument(msg) {}
};

// Negative log likelihood of `labels` under per-frame log posteriors, summed
// over all monotonic alignments.  log_probs is T x C with one column per
// class; `blank` selects the blank column.  Labels must not contain blank.
double CtcLoss(const Mat& log_probs, const std::vector<int>& labels, int blank);

// Gradient of CtcLoss with respect to log_probs.  Row sums are -1 (the
// posterior over classes at every frame has unit mass).  If loss_out is
// non-null it receives the loss.
Mat CtcGrad(const Mat& log_probs, const std::vector<int>& labels, int blank,
            double* loss_out = nullptr);

// Per-frame normalized keyword log likelihood: -CtcLoss / T.  Returns -inf
// instead of throwing when the labels cannot be aligned.
double CtcKeywordScore(const Mat& log_probs, const std::vector<int>& labels,
                       int blank);

// Autodiff wrapper around CtcLoss/CtcGrad.  log_probs rows are frames.
ad::Var CtcLossNode(ad::Var log_probs, const std::vector<int>& labels,
                    int blank);

// Frame-wise argmax decoding with repeat collapsing and blank removal.
std::vector<int> GreedyCtcDecode(const Mat& log_probs, int blank);

}  // namespace vtrig

#endif  // VTRIG_CTC_H_
