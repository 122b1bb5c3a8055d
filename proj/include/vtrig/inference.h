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

// Enrollment and scoring.  A detector is personalized by averaging decoder
// embeddings of a few keyword utterances into an anchor; test utterances get
// a phonetic score (length-normalized keyword log likelihood) and a speaker
// score (calibrated cosine against the anchor), fused by a weighted average.

#ifndef VTRIG_INFERENCE_H_
#define VTRIG_INFERENCE_H_

#include <string>
#include <utility>
#include <vector>

#include "vtrig/features.h"
#include "vtrig/model.h"
#include "vtrig/sampler.h"

namespace vtrig {

struct AnchorEmbedding {
  Vec values;
  int enrolled_count = 0;
};

// Affine standardization fitted on validation scores.
struct Calibration {
  double c = 0.0;  // mean
  double d = 1.0;  // population std
  void Validate() const;
};

struct ScoredUtterance {
  Vec embedding;
  double s_ctc = 0.0;  // -inf when the keyword cannot be aligned
};

// Read-only scoring front end over a trained model.  All evaluation-mode:
// no dropout, decoder fed from the model's configured tap layer.
class Scorer {
 public:
  Scorer(const ModelParams* params, const FeaturePipeline* pipe,
         std::vector<int> keyword);

  // One encoder+decoder pass producing both scores' raw material.
  ScoredUtterance Score(const Utterance& u) const;
  Vec Embed(const Utterance& u) const;
  double CtcScore(const Utterance& u) const;

  const ModelParams& params() const { return *params_; }
  const std::vector<int>& keyword() const { return keyword_; }

 private:
  const ModelParams* params_;
  const FeaturePipeline* pipe_;
  std::vector<int> keyword_;
};

// Elementwise mean of the embeddings.  The inputs are sorted internally so
// the result is bitwise identical under permutation of the list.
AnchorEmbedding EnrollEmbeddings(std::vector<Vec> embeddings);

// Embeds and averages keyword utterances.  Every utterance must carry a
// positive phrase label.
AnchorEmbedding Enroll(const Scorer& scorer,
                       const std::vector<const Utterance*>& utts);

// Raw calibrated-cosine similarity of an embedding against the anchor, using
// the model's trained similarity scalars.  In (0, 1).
double MetricScoreRaw(const ModelParams& params, const AnchorEmbedding& anchor,
                      const Vec& embedding);

// c = mean, d = population std of the scores.  Constant scores are rejected:
// a degenerate validation set cannot standardize anything.
Calibration FitCalibration(const std::vector<double>& raw_scores);

double Calibrate(double raw, const Calibration& cal);

// (1 - mu) * s_ctc + mu * s_metric.  The endpoints return the corresponding
// input untouched so an infinite partner score cannot poison them.
double Fuse(double s_ctc, double s_metric, double mu);

// Anchor persistence in the checkpoint container, one tensor per name.
void SaveAnchors(
    const std::string& path,
    const std::vector<std::pair<std::string, AnchorEmbedding>>& anchors);
std::vector<std::pair<std::string, AnchorEmbedding>> LoadAnchors(
    const std::string& path);

}  // namespace vtrig

#endif  // VTRIG_INFERENCE_H_
