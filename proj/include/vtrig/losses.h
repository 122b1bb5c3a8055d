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

#ifndef VTRIG_LOSSES_H_
#define VTRIG_LOSSES_H_

#include <optional>
#include <utility>
#include <vector>

#include "vtrig/common.h"

namespace vtrig {

struct LossWeights {
  double alpha = 1.0;  // phrase term
  double beta = 1.0;   // speaker term
  double gamma = 0.1;  // metric term
};

// Binary cross entropy from a raw logit, stable for large |logit|.
double PhraseCe(double logit, int label);

// Multi-class cross entropy from raw logits.
double SpeakerCe(const Vec& logits, int speaker);

// Per-utterance metadata needed for pair construction.  Utterances without a
// speaker id are treated as mutually distinct speakers: they can only form
// negative pairs.
struct PairItem {
  std::optional<int> speaker;
  int phrase_label = 0;
};

struct PairSets {
  std::vector<std::pair<int, int>> positives;
  std::vector<std::pair<int, int>> negatives;
};

// Positive pairs: same speaker, both keyword.  Negative pairs: different
// speakers (any labels), or same speaker with differing phrase labels.
// Same-speaker pairs where neither side is a keyword carry no signal and are
// skipped.  strict_pairs additionally drops different-speaker pairs where
// neither side is a keyword.
PairSets BuildPairs(const std::vector<PairItem>& items,
                    bool strict_pairs = false);

// Keeps all positives and a uniform subset of min(|N|, |P|) negatives.
PairSets SubsampleNegatives(const PairSets& pairs, Rng* rng);

// Calibrated cosine: (a * cos(e_i, e_j) + b + 1) / 2, clamped to
// [1e-6, 1 - 1e-6].  Zero-norm embeddings are rejected.
double Similarity(const Vec& ei, const Vec& ej, double a, double b);

struct MetricLossResult {
  double loss = 0.0;
  std::vector<Vec> d_embeddings;
  double da = 0.0;
  double db = 0.0;
};

// Pairwise binary cross entropy on calibrated cosines: positives push toward
// 1, negatives toward 0, each side averaged over its own pair count.
double MetricLoss(const std::vector<Vec>& embeddings, const PairSets& pairs,
                  double a, double b);

// Same value plus closed-form gradients with respect to every embedding and
// the two calibration scalars.  Clamped pairs contribute zero gradient.
MetricLossResult MetricLossWithGrad(const std::vector<Vec>& embeddings,
                                    const PairSets& pairs, double a, double b);

struct LossBreakdown {
  double phone = 0.0;
  double phrase = 0.0;
  double spkr = 0.0;
  double metric = 0.0;
  double total = 0.0;
};

// total = phone + alpha * phrase + beta * spkr + gamma * metric.  Terms
// without data enter as zero.
LossBreakdown CombineLosses(double phone, double phrase, double spkr,
                            double metric, const LossWeights& w);

}  // namespace vtrig

#endif  // VTRIG_LOSSES_H_
