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

#include "vtrig/inference.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vtrig/checkpoint.h"
#include "vtrig/ctc.h"
#include "vtrig/losses.h"

namespace vtrig {

void Calibration::Validate() const {
  if (!(d > 0.0)) {
    throw std::invalid_argument("calibration: std must be positive");
  }
  if (!std::isfinite(c) || !std::isfinite(d)) {
    throw std::invalid_argument("calibration: non-finite parameters");
  }
}

Scorer::Scorer(const ModelParams* params, const FeaturePipeline* pipe,
               std::vector<int> keyword)
    : params_(params), pipe_(pipe), keyword_(std::move(keyword)) {
  if (params_ == nullptr || pipe_ == nullptr) {
    throw std::invalid_argument("scorer: null model or pipeline");
  }
  if (keyword_.empty()) {
    throw std::invalid_argument("scorer: empty keyword");
  }
  for (int p : keyword_) {
    if (p < 0 || p >= params_->cfg.BlankIndex()) {
      throw std::invalid_argument("scorer: keyword phoneme out of range");
    }
  }
}

ScoredUtterance Scorer::Score(const Utterance& u) const {
  ad::NoGradScope ng;
  const Mat feats = pipe_->Apply(u.features);
  auto enc = EncoderForward(ad::Constant(feats), *params_);
  auto emb = DecoderForward(enc.taps.at(params_->cfg.tap_layer - 1), *params_);
  ScoredUtterance out;
  out.embedding = emb->value.row(0).transpose();
  out.s_ctc = CtcKeywordScore(enc.log_posteriors->value, keyword_,
                              params_->cfg.BlankIndex());
  return out;
}

Vec Scorer::Embed(const Utterance& u) const { return Score(u).embedding; }

double Scorer::CtcScore(const Utterance& u) const { return Score(u).s_ctc; }

AnchorEmbedding EnrollEmbeddings(std::vector<Vec> embeddings) {
  if (embeddings.empty()) {
    throw std::invalid_argument("enroll: need at least one embedding");
  }
  const auto dim = embeddings.front().size();
  for (const Vec& e : embeddings) {
    if (e.size() != dim) {
      throw std::invalid_argument("enroll: embedding dimensions differ");
    }
  }
  // Floating-point addition is order-sensitive; a canonical summation order
  // makes the anchor independent of how the list was assembled.
  std::sort(embeddings.begin(), embeddings.end(),
            [](const Vec& a, const Vec& b) {
              return std::lexicographical_compare(
                  a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
            });
  AnchorEmbedding anchor;
  anchor.values = Vec::Zero(dim);
  for (const Vec& e : embeddings) anchor.values += e;
  anchor.values /= static_cast<double>(embeddings.size());
  anchor.enrolled_count = static_cast<int>(embeddings.size());
  if (!anchor.values.allFinite()) {
    throw NumericalError("enroll: non-finite anchor");
  }
  return anchor;
}

AnchorEmbedding Enroll(const Scorer& scorer,
                       const std::vector<const Utterance*>& utts) {
  if (utts.empty()) {
    throw std::invalid_argument("enroll: need at least one utterance");
  }
  std::vector<Vec> embeddings;
  embeddings.reserve(utts.size());
  for (const Utterance* u : utts) {
    if (u->phrase_label != 1) {
      throw std::invalid_argument("enroll: " + u->id +
                                  " is not a keyword utterance");
    }
    embeddings.push_back(scorer.Embed(*u));
  }
  return EnrollEmbeddings(std::move(embeddings));
}

double MetricScoreRaw(const ModelParams& params, const AnchorEmbedding& anchor,
                      const Vec& embedding) {
  return Similarity(embedding, anchor.values, params.MetricA(),
                    params.MetricB());
}

Calibration FitCalibration(const std::vector<double>& raw_scores) {
  if (raw_scores.size() < 2) {
    throw std::invalid_argument("calibration: need at least two scores");
  }
  double mean = 0.0;
  for (double s : raw_scores) {
    if (!std::isfinite(s)) {
      throw DataError("calibration: non-finite validation score");
    }
    mean += s;
  }
  mean /= static_cast<double>(raw_scores.size());
  double var = 0.0;
  for (double s : raw_scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(raw_scores.size());
  const double std_dev = std::sqrt(std::max(var, 0.0));
  if (std_dev <= 0.0) {
    throw DataError("calibration: validation scores have zero spread");
  }
  Calibration cal;
  cal.c = mean;
  cal.d = std_dev;
  return cal;
}

double Calibrate(double raw, const Calibration& cal) {
  cal.Validate();
  return (raw - cal.c) / cal.d;
}

double Fuse(double s_ctc, double s_metric, double mu) {
  if (mu < 0.0 || mu > 1.0) {
    throw std::invalid_argument("fuse: mu must be in [0, 1]");
  }
  if (mu == 0.0) return s_ctc;
  if (mu == 1.0) return s_metric;
  return (1.0 - mu) * s_ctc + mu * s_metric;
}

void SaveAnchors(
    const std::string& path,
    const std::vector<std::pair<std::string, AnchorEmbedding>>& anchors) {
  Checkpoint ckpt;
  ckpt.meta["kind"] = "anchors";
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [name, anchor] : anchors) {
    Mat row(1, anchor.values.size());
    row.row(0) = anchor.values.transpose();
    ckpt.tensors.emplace_back("anchor." + name, std::move(row));
    counts[name] = anchor.enrolled_count;
  }
  ckpt.meta["enrolled_counts"] = counts;
  ckpt.Save(path);
}

std::vector<std::pair<std::string, AnchorEmbedding>> LoadAnchors(
    const std::string& path) {
  Checkpoint ckpt = Checkpoint::Load(path);
  if (!ckpt.meta.contains("kind") || ckpt.meta["kind"] != "anchors") {
    throw DataError(path + ": not an anchor file");
  }
  std::vector<std::pair<std::string, AnchorEmbedding>> out;
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (name.rfind("anchor.", 0) != 0) continue;
    const std::string speaker = name.substr(7);
    AnchorEmbedding anchor;
    anchor.values = tensor.row(0).transpose();
    anchor.enrolled_count = ckpt.meta["enrolled_counts"].value(speaker, 0);
    out.emplace_back(speaker, std::move(anchor));
  }
  return out;
}

}  // namespace vtrig
