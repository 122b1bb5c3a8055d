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

// Acoustic model: a self-attention encoder producing per-frame phoneme
// posteriors, and a small cross-attention decoder that pools an intermediate
// encoder layer into a fixed-size utterance embedding through a set of
// trainable query vectors.

#ifndef VTRIG_MODEL_H_
#define VTRIG_MODEL_H_

#include <string>
#include <utility>
#include <vector>

#include "vtrig/autodiff.h"
#include "vtrig/common.h"

namespace vtrig {

struct ModelConfig {
  int input_dim = 280;       // stacked acoustic frame
  int d_model = 256;
  int num_heads = 4;
  int ffn_dim = 1024;
  int encoder_blocks = 6;
  int decoder_blocks = 1;
  int num_queries = 4;       // decoder query vectors
  int phoneme_classes = 54;  // includes the blank as the last class
  int speaker_classes = 0;   // 0 until the speaker head is dimensioned
  int tap_layer = 5;         // encoder layer feeding the decoder (1-based)
  double speaker_dropout = 0.6;
  double ln_eps = 1e-5;

  int BlankIndex() const { return phoneme_classes - 1; }
  int EmbeddingDim() const { return d_model * num_queries; }
  void Validate() const;
};

struct AttentionParams {
  ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
};

struct EncoderBlockParams {
  ad::Var ln1_gain, ln1_bias;
  AttentionParams att;
  ad::Var ln2_gain, ln2_bias;
  ad::Var ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct DecoderBlockParams {
  ad::Var ln_q_gain, ln_q_bias;   // query-side norm before cross attention
  AttentionParams cross;
  ad::Var ln_f_gain, ln_f_bias;
  ad::Var ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

// All trainable tensors.  Tensor names are stable and hierarchical; the
// prefix of a name identifies the parameter group used for freezing and
// checkpointing ("input_proj.", "encoder.", "phoneme_head.", "decoder.",
// "queries", "phrase_head.", "speaker_head.", "metric.").
struct ModelParams {
  ModelConfig cfg;

  ad::Var input_w, input_b;
  std::vector<EncoderBlockParams> encoder;
  ad::Var enc_ln_gain, enc_ln_bias;  // final norm before the phoneme head
  ad::Var phoneme_w, phoneme_b;

  ad::Var queries;                  // num_queries x d_model
  ad::Var mem_ln_gain, mem_ln_bias; // norm applied to the tapped layer
  std::vector<DecoderBlockParams> decoder;
  ad::Var dec_ln_gain, dec_ln_bias;
  ad::Var phrase_w, phrase_b;       // embedding -> 1
  ad::Var speaker_w, speaker_b;     // embedding -> speaker_classes
  ad::Var metric_a, metric_b;       // similarity calibration scalars, 1 x 1

  static ModelParams Init(const ModelConfig& cfg, Rng* rng);

  // Stable name -> tensor listing (deterministic order).
  std::vector<std::pair<std::string, ad::Var>> NamedTensors() const;
  ad::Var Find(const std::string& name) const;

  double MetricA() const { return metric_a->value(0, 0); }
  double MetricB() const { return metric_b->value(0, 0); }
};

// Group predicate used by the fine-tuning freeze: everything upstream of and
// including the phoneme head.
bool InEncoderGroup(const std::string& tensor_name);

// Re-dimensions the speaker head for a new speaker inventory with a fresh
// fan-in init.  No-op when the size already matches; no other tensor is
// touched.  Used when adaptation introduces the speaker inventory to a model
// trained without one.
void ResizeSpeakerHead(ModelParams* params, int speaker_classes, Rng* rng);

struct EncoderOutput {
  std::vector<ad::Var> taps;  // taps[i] is the output of block i+1, T' x d
  ad::Var log_posteriors;     // T' x phoneme_classes
  // Per block, per head attention weights (rows sum to one).  Only filled
  // when requested.
  std::vector<std::vector<Mat>> attention;
};

// Runs the encoder over processed features (T' x input_dim).
EncoderOutput EncoderForward(ad::Var features, const ModelParams& params,
                             bool keep_attention = false);

// Pools a tapped encoder layer (T' x d_model) into a 1 x (d_model *
// num_queries) utterance embedding.
ad::Var DecoderForward(ad::Var tap, const ModelParams& params);

// Keyword/non-keyword logit from the embedding, 1 x 1.
ad::Var PhraseLogit(ad::Var embedding, const ModelParams& params);

// Speaker logits from the embedding, 1 x speaker_classes.  In training mode
// the embedding passes through inverted dropout driven by `rng`; evaluation
// mode is deterministic and applies no mask.
ad::Var SpeakerLogits(ad::Var embedding, const ModelParams& params,
                      bool training, Rng* rng);

// Sinusoidal position code, T x d.
Mat PositionalEncoding(int num_frames, int d_model);

}  // namespace vtrig

#endif  // VTRIG_MODEL_H_
