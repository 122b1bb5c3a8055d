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

#include "vtrig/losses.h"

#include <algorithm>
#include <cmath>

namespace vtrig {

namespace {

constexpr double kClampEps = 1e-6;

struct PairGeometry {
  double cos = 0.0;
  double inv_ni = 0.0;
  double inv_nj = 0.0;
};

PairGeometry Cosine(const Vec& ei, const Vec& ej) {
  double ni = ei.norm();
  double nj = ej.norm();
  if (ni == 0.0 || nj == 0.0) {
    throw std::invalid_argument("similarity: zero-norm embedding");
  }
  PairGeometry g;
  g.inv_ni = 1.0 / ni;
  g.inv_nj = 1.0 / nj;
  g.cos = ei.dot(ej) / (ni * nj);
  return g;
}

double ClampP(double p) {
  return std::clamp(p, kClampEps, 1.0 - kClampEps);
}

}  // namespace

double PhraseCe(double logit, int label) {
  if (label != 0 && label != 1) {
    throw std::invalid_argument("phrase_ce: label must be 0 or 1");
  }
  return std::max(logit, 0.0) - logit * label +
         std::log1p(std::exp(-std::abs(logit)));
}

double SpeakerCe(const Vec& logits, int speaker) {
  if (speaker < 0 || speaker >= logits.size()) {
    throw std::invalid_argument("speaker_ce: target out of range");
  }
  double m = logits.maxCoeff();
  double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(speaker);
}

PairSets BuildPairs(const std::vector<PairItem>& items, bool strict_pairs) {
  if (items.size() < 2) {
    throw std::invalid_argument("build_pairs: need at least 2 utterances");
  }
  PairSets out;
  const int n = static_cast<int>(items.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const PairItem& a = items[i];
      const PairItem& b = items[j];
      bool same_speaker =
          a.speaker.has_value() && b.speaker.has_value() && *a.speaker == *b.speaker;
      if (same_speaker) {
        if (a.phrase_label == 1 && b.phrase_label == 1) {
          out.positives.emplace_back(i, j);
        } else if (a.phrase_label != b.phrase_label) {
          out.negatives.emplace_back(i, j);
        }
        // Same speaker, both non-keyword: no signal either way.
      } else {
        if (strict_pairs && a.phrase_label == 0 && b.phrase_label == 0) continue;
        out.negatives.emplace_back(i, j);
      }
    }
  }
  return out;
}

PairSets SubsampleNegatives(const PairSets& pairs, Rng* rng) {
  PairSets out;
  out.positives = pairs.positives;
  const size_t keep = std::min(pairs.negatives.size(), pairs.positives.size());
  if (pairs.negatives.size() <= keep) {
    out.negatives = pairs.negatives;
    return out;
  }
  std::vector<int> chosen = rng->SampleWithoutReplacement(
      static_cast<int>(pairs.negatives.size()), static_cast<int>(keep));
  std::sort(chosen.begin(), chosen.end());
  out.negatives.reserve(keep);
  for (int idx : chosen) out.negatives.push_back(pairs.negatives[idx]);
  return out;
}

double Similarity(const Vec& ei, const Vec& ej, double a, double b) {
  PairGeometry g = Cosine(ei, ej);
  return ClampP((a * g.cos + b + 1.0) / 2.0);
}

double MetricLoss(const std::vector<Vec>& embeddings, const PairSets& pairs,
                  double a, double b) {
  double loss = 0.0;
  if (!pairs.positives.empty()) {
    double s = 0.0;
    for (const auto& [i, j] : pairs.positives) {
      s -= std::log(Similarity(embeddings.at(i), embeddings.at(j), a, b));
    }
    loss += s / static_cast<double>(pairs.positives.size());
  }
  if (!pairs.negatives.empty()) {
    double s = 0.0;
    for (const auto& [i, j] : pairs.negatives) {
      s -= std::log(1.0 - Similarity(embeddings.at(i), embeddings.at(j), a, b));
    }
    loss += s / static_cast<double>(pairs.negatives.size());
  }
  return loss;
}

MetricLossResult MetricLossWithGrad(const std::vector<Vec>& embeddings,
                                    const PairSets& pairs, double a, double b) {
  MetricLossResult res;
  res.d_embeddings.resize(embeddings.size());
  for (size_t i = 0; i < embeddings.size(); ++i) {
    res.d_embeddings[i] = Vec::Zero(embeddings[i].size());
  }

  auto accumulate = [&](const std::vector<std::pair<int, int>>& set,
                        bool positive) {
    if (set.empty()) return;
    const double inv_count = 1.0 / static_cast<double>(set.size());
    for (const auto& [i, j] : set) {
      const Vec& ei = embeddings.at(i);
      const Vec& ej = embeddings.at(j);
      PairGeometry g = Cosine(ei, ej);
      double raw = (a * g.cos + b + 1.0) / 2.0;
      double p = ClampP(raw);
      double dl_dp;
      if (positive) {
        res.loss += -std::log(p) * inv_count;
        dl_dp = -inv_count / p;
      } else {
        res.loss += -std::log(1.0 - p) * inv_count;
        dl_dp = inv_count / (1.0 - p);
      }
      if (raw <= kClampEps || raw >= 1.0 - kClampEps) continue;  // flat region
      res.da += dl_dp * g.cos / 2.0;
      res.db += dl_dp / 2.0;
      double dl_dcos = dl_dp * a / 2.0;
      // d cos / d e_i = e_j / (|e_i||e_j|) - cos * e_i / |e_i|^2
      res.d_embeddings[i] +=
          dl_dcos * (ej * (g.inv_ni * g.inv_nj) - g.cos * g.inv_ni * g.inv_ni * ei);
      res.d_embeddings[j] +=
          dl_dcos * (ei * (g.inv_ni * g.inv_nj) - g.cos * g.inv_nj * g.inv_nj * ej);
    }
  };
  accumulate(pairs.positives, true);
  accumulate(pairs.negatives, false);
  return res;
}

LossBreakdown CombineLosses(double phone, double phrase, double spkr,
                            double metric, const LossWeights& w) {
  LossBreakdown b;
  b.phone = phone;
  b.phrase = phrase;
  b.spkr = spkr;
  b.metric = metric;
  b.total = phone + w.alpha * phrase + w.beta * spkr + w.gamma * metric;
  return b;
}

}  // namespace vtrig
