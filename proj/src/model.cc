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

#include "vtrig/model.h"

#include <cmath>

namespace vtrig {

namespace {

using ad::Var;

Mat UniformInit(int rows, int cols, Rng* rng) {
  // Fan-in uniform, the usual default for linear layers.
  double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = (2.0 * rng->Uniform() - 1.0) * bound;
    }
  }
  return m;
}

Var Param(Mat value) { return ad::Leaf(std::move(value), true); }

AttentionParams InitAttention(int d, Rng* rng) {
  AttentionParams p;
  p.wq = Param(UniformInit(d, d, rng));
  p.bq = Param(Mat::Zero(1, d));
  p.wk = Param(UniformInit(d, d, rng));
  p.bk = Param(Mat::Zero(1, d));
  p.wv = Param(UniformInit(d, d, rng));
  p.bv = Param(Mat::Zero(1, d));
  p.wo = Param(UniformInit(d, d, rng));
  p.bo = Param(Mat::Zero(1, d));
  return p;
}

// Scaled dot-product attention with `queries` attending over `memory`.
// Returns the projected context; per-head weights go to *weights_out when
// requested.
Var MultiHeadAttention(Var queries, Var memory, const AttentionParams& p,
                       int num_heads, std::vector<Mat>* weights_out) {
  const int d = static_cast<int>(queries->value.cols());
  const int dh = d / num_heads;
  Var q = ad::AddRowVec(ad::MatMul(queries, p.wq), p.bq);
  Var k = ad::AddRowVec(ad::MatMul(memory, p.wk), p.bk);
  Var v = ad::AddRowVec(ad::MatMul(memory, p.wv), p.bv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads(num_heads);
  for (int h = 0; h < num_heads; ++h) {
    Var qh = ad::SliceCols(q, h * dh, dh);
    Var kh = ad::SliceCols(k, h * dh, dh);
    Var vh = ad::SliceCols(v, h * dh, dh);
    Var scores = ad::Scale(ad::MatMul(qh, ad::Transpose(kh)), scale);
    Var att = ad::RowSoftmax(scores);
    if (weights_out != nullptr) weights_out->push_back(att->value);
    heads[h] = ad::MatMul(att, vh);
  }
  Var ctx = ad::ConcatCols(heads);
  return ad::AddRowVec(ad::MatMul(ctx, p.wo), p.bo);
}

Var FeedForward(Var x, Var w1, Var b1, Var w2, Var b2) {
  Var h = ad::Relu(ad::AddRowVec(ad::MatMul(x, w1), b1));
  return ad::AddRowVec(ad::MatMul(h, w2), b2);
}

}  // namespace

void ModelConfig::Validate() const {
  if (input_dim <= 0 || d_model <= 0 || ffn_dim <= 0) {
    throw std::invalid_argument("model config: non-positive dimension");
  }
  if (num_heads <= 0 || d_model % num_heads != 0) {
    throw std::invalid_argument("model config: d_model must divide into heads");
  }
  if (encoder_blocks <= 0 || decoder_blocks <= 0 || num_queries <= 0) {
    throw std::invalid_argument("model config: need at least one block/query");
  }
  if (phoneme_classes < 2) {
    throw std::invalid_argument("model config: phoneme_classes must be >= 2");
  }
  if (tap_layer < 1 || tap_layer > encoder_blocks) {
    throw std::invalid_argument("model config: tap_layer out of range");
  }
  if (speaker_dropout < 0.0 || speaker_dropout >= 1.0) {
    throw std::invalid_argument("model config: speaker_dropout must be in [0,1)");
  }
}

ModelParams ModelParams::Init(const ModelConfig& cfg, Rng* rng) {
  cfg.Validate();
  ModelParams p;
  p.cfg = cfg;
  const int d = cfg.d_model;

  p.input_w = Param(UniformInit(cfg.input_dim, d, rng));
  p.input_b = Param(Mat::Zero(1, d));

  p.encoder.resize(cfg.encoder_blocks);
  for (auto& blk : p.encoder) {
    blk.ln1_gain = Param(Mat::Ones(1, d));
    blk.ln1_bias = Param(Mat::Zero(1, d));
    blk.att = InitAttention(d, rng);
    blk.ln2_gain = Param(Mat::Ones(1, d));
    blk.ln2_bias = Param(Mat::Zero(1, d));
    blk.ffn_w1 = Param(UniformInit(d, cfg.ffn_dim, rng));
    blk.ffn_b1 = Param(Mat::Zero(1, cfg.ffn_dim));
    blk.ffn_w2 = Param(UniformInit(cfg.ffn_dim, d, rng));
    blk.ffn_b2 = Param(Mat::Zero(1, d));
  }
  p.enc_ln_gain = Param(Mat::Ones(1, d));
  p.enc_ln_bias = Param(Mat::Zero(1, d));
  p.phoneme_w = Param(UniformInit(d, cfg.phoneme_classes, rng));
  p.phoneme_b = Param(Mat::Zero(1, cfg.phoneme_classes));

  Mat q(cfg.num_queries, d);
  double qs = 1.0 / std::sqrt(static_cast<double>(d));
  for (int r = 0; r < cfg.num_queries; ++r) {
    for (int c = 0; c < d; ++c) q(r, c) = rng->Gaussian() * qs;
  }
  p.queries = Param(std::move(q));
  p.mem_ln_gain = Param(Mat::Ones(1, d));
  p.mem_ln_bias = Param(Mat::Zero(1, d));

  p.decoder.resize(cfg.decoder_blocks);
  for (auto& blk : p.decoder) {
    blk.ln_q_gain = Param(Mat::Ones(1, d));
    blk.ln_q_bias = Param(Mat::Zero(1, d));
    blk.cross = InitAttention(d, rng);
    blk.ln_f_gain = Param(Mat::Ones(1, d));
    blk.ln_f_bias = Param(Mat::Zero(1, d));
    blk.ffn_w1 = Param(UniformInit(d, cfg.ffn_dim, rng));
    blk.ffn_b1 = Param(Mat::Zero(1, cfg.ffn_dim));
    blk.ffn_w2 = Param(UniformInit(cfg.ffn_dim, d, rng));
    blk.ffn_b2 = Param(Mat::Zero(1, d));
  }
  p.dec_ln_gain = Param(Mat::Ones(1, d));
  p.dec_ln_bias = Param(Mat::Zero(1, d));

  const int e = cfg.EmbeddingDim();
  p.phrase_w = Param(UniformInit(e, 1, rng));
  p.phrase_b = Param(Mat::Zero(1, 1));
  int k = cfg.speaker_classes > 0 ? cfg.speaker_classes : 1;
  p.speaker_w = Param(UniformInit(e, k, rng));
  p.speaker_b = Param(Mat::Zero(1, k));

  p.metric_a = Param(Mat::Ones(1, 1));
  p.metric_b = Param(Mat::Zero(1, 1));
  return p;
}

std::vector<std::pair<std::string, ad::Var>> ModelParams::NamedTensors() const {
  std::vector<std::pair<std::string, ad::Var>> out;
  auto add = [&out](const std::string& name, const ad::Var& v) {
    out.emplace_back(name, v);
  };
  auto add_att = [&add](const std::string& prefix, const AttentionParams& a) {
    add(prefix + ".wq", a.wq);
    add(prefix + ".bq", a.bq);
    add(prefix + ".wk", a.wk);
    add(prefix + ".bk", a.bk);
    add(prefix + ".wv", a.wv);
    add(prefix + ".bv", a.bv);
    add(prefix + ".wo", a.wo);
    add(prefix + ".bo", a.bo);
  };

  add("input_proj.w", input_w);
  add("input_proj.b", input_b);
  for (size_t i = 0; i < encoder.size(); ++i) {
    std::string pfx = "encoder." + std::to_string(i);
    const auto& blk = encoder[i];
    add(pfx + ".ln1.gain", blk.ln1_gain);
    add(pfx + ".ln1.bias", blk.ln1_bias);
    add_att(pfx + ".att", blk.att);
    add(pfx + ".ln2.gain", blk.ln2_gain);
    add(pfx + ".ln2.bias", blk.ln2_bias);
    add(pfx + ".ffn.w1", blk.ffn_w1);
    add(pfx + ".ffn.b1", blk.ffn_b1);
    add(pfx + ".ffn.w2", blk.ffn_w2);
    add(pfx + ".ffn.b2", blk.ffn_b2);
  }
  add("encoder.final_ln.gain", enc_ln_gain);
  add("encoder.final_ln.bias", enc_ln_bias);
  add("phoneme_head.w", phoneme_w);
  add("phoneme_head.b", phoneme_b);

  add("queries", queries);
  add("decoder.mem_ln.gain", mem_ln_gain);
  add("decoder.mem_ln.bias", mem_ln_bias);
  for (size_t i = 0; i < decoder.size(); ++i) {
    std::string pfx = "decoder." + std::to_string(i);
    const auto& blk = decoder[i];
    add(pfx + ".ln_q.gain", blk.ln_q_gain);
    add(pfx + ".ln_q.bias", blk.ln_q_bias);
    add_att(pfx + ".cross", blk.cross);
    add(pfx + ".ln_f.gain", blk.ln_f_gain);
    add(pfx + ".ln_f.bias", blk.ln_f_bias);
    add(pfx + ".ffn.w1", blk.ffn_w1);
    add(pfx + ".ffn.b1", blk.ffn_b1);
    add(pfx + ".ffn.w2", blk.ffn_w2);
    add(pfx + ".ffn.b2", blk.ffn_b2);
  }
  add("decoder.final_ln.gain", dec_ln_gain);
  add("decoder.final_ln.bias", dec_ln_bias);
  add("phrase_head.w", phrase_w);
  add("phrase_head.b", phrase_b);
  add("speaker_head.w", speaker_w);
  add("speaker_head.b", speaker_b);
  add("metric.a", metric_a);
  add("metric.b", metric_b);
  return out;
}

ad::Var ModelParams::Find(const std::string& name) const {
  for (const auto& [n, v] : NamedTensors()) {
    if (n == name) return v;
  }
  throw std::invalid_argument("no tensor named " + name);
}

bool InEncoderGroup(const std::string& tensor_name) {
  return tensor_name.rfind("input_proj.", 0) == 0 ||
         tensor_name.rfind("encoder.", 0) == 0 ||
         tensor_name.rfind("phoneme_head.", 0) == 0;
}

void ResizeSpeakerHead(ModelParams* params, int speaker_classes, Rng* rng) {
  if (params == nullptr || rng == nullptr) {
    throw std::invalid_argument("resize_speaker_head: null argument");
  }
  if (speaker_classes <= 0) {
    throw std::invalid_argument("resize_speaker_head: need positive classes");
  }
  if (params->cfg.speaker_classes == speaker_classes) return;
  params->cfg.speaker_classes = speaker_classes;
  const int e = params->cfg.EmbeddingDim();
  params->speaker_w = Param(UniformInit(e, speaker_classes, rng));
  params->speaker_b = Param(Mat::Zero(1, speaker_classes));
}

Mat PositionalEncoding(int num_frames, int d_model) {
  Mat pe(num_frames, d_model);
  for (int t = 0; t < num_frames; ++t) {
    for (int i = 0; i < d_model / 2; ++i) {
      double rate = std::pow(10000.0, -2.0 * i / static_cast<double>(d_model));
      pe(t, 2 * i) = std::sin(t * rate);
      pe(t, 2 * i + 1) = std::cos(t * rate);
    }
    if (d_model % 2 == 1) {
      double rate = std::pow(10000.0, -(d_model - 1.0) / d_model);
      pe(t, d_model - 1) = std::sin(t * rate);
    }
  }
  return pe;
}

EncoderOutput EncoderForward(ad::Var features, const ModelParams& params,
                             bool keep_attention) {
  const ModelConfig& cfg = params.cfg;
  if (features->value.cols() != cfg.input_dim) {
    throw std::invalid_argument("encoder: feature dim mismatch");
  }
  if (features->value.rows() == 0) {
    throw std::invalid_argument("encoder: empty input");
  }
  const int T = static_cast<int>(features->value.rows());
  const double eps = cfg.ln_eps;

  Var x = ad::AddRowVec(ad::MatMul(features, params.input_w), params.input_b);
  x = ad::AddConst(x, PositionalEncoding(T, cfg.d_model));

  EncoderOutput out;
  out.taps.reserve(params.encoder.size());
  for (const auto& blk : params.encoder) {
    // Pre-norm residual blocks.
    Var h = ad::LayerNorm(x, blk.ln1_gain, blk.ln1_bias, eps);
    std::vector<Mat> att_weights;
    Var att = MultiHeadAttention(h, h, blk.att, cfg.num_heads,
                                 keep_attention ? &att_weights : nullptr);
    x = ad::Add(x, att);
    Var f = ad::LayerNorm(x, blk.ln2_gain, blk.ln2_bias, eps);
    x = ad::Add(x, FeedForward(f, blk.ffn_w1, blk.ffn_b1, blk.ffn_w2, blk.ffn_b2));
    out.taps.push_back(x);
    if (keep_attention) out.attention.push_back(std::move(att_weights));
  }

  Var top = ad::LayerNorm(x, params.enc_ln_gain, params.enc_ln_bias, eps);
  Var logits = ad::AddRowVec(ad::MatMul(top, params.phoneme_w), params.phoneme_b);
  out.log_posteriors = ad::RowLogSoftmax(logits);
  return out;
}

ad::Var DecoderForward(ad::Var tap, const ModelParams& params) {
  const ModelConfig& cfg = params.cfg;
  if (tap->value.cols() != cfg.d_model) {
    throw std::invalid_argument("decoder: tap dim mismatch");
  }
  const double eps = cfg.ln_eps;
  Var mem = ad::LayerNorm(tap, params.mem_ln_gain, params.mem_ln_bias, eps);
  Var q = params.queries;
  for (const auto& blk : params.decoder) {
    Var qn = ad::LayerNorm(q, blk.ln_q_gain, blk.ln_q_bias, eps);
    Var ctx = MultiHeadAttention(qn, mem, blk.cross, cfg.num_heads, nullptr);
    q = ad::Add(q, ctx);
    Var f = ad::LayerNorm(q, blk.ln_f_gain, blk.ln_f_bias, eps);
    q = ad::Add(q, FeedForward(f, blk.ffn_w1, blk.ffn_b1, blk.ffn_w2, blk.ffn_b2));
  }
  Var pooled = ad::LayerNorm(q, params.dec_ln_gain, params.dec_ln_bias, eps);
  // num_queries x d_model flattened row-wise into one embedding row.
  return ad::Reshape(pooled, 1, cfg.EmbeddingDim());
}

ad::Var PhraseLogit(ad::Var embedding, const ModelParams& params) {
  return ad::AddRowVec(ad::MatMul(embedding, params.phrase_w), params.phrase_b);
}

ad::Var SpeakerLogits(ad::Var embedding, const ModelParams& params,
                      bool training, Rng* rng) {
  if (params.cfg.speaker_classes <= 0) {
    throw std::invalid_argument("speaker head is not dimensioned");
  }
  Var e = embedding;
  if (training && params.cfg.speaker_dropout > 0.0) {
    if (rng == nullptr) {
      throw std::invalid_argument("speaker logits: training mode needs an rng");
    }
    const double keep = 1.0 - params.cfg.speaker_dropout;
    Mat mask(1, embedding->value.cols());
    for (Eigen::Index i = 0; i < mask.cols(); ++i) {
      mask(0, i) = rng->Uniform() < keep ? 1.0 / keep : 0.0;
    }
    e = ad::CMul(e, ad::Constant(std::move(mask)));
  }
  return ad::AddRowVec(ad::MatMul(e, params.speaker_w), params.speaker_b);
}

}  // namespace vtrig
