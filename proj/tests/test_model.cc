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
#include <stdexcept>
#include <string>
#include <vector>

#include "vtrig/autodiff.h"
#include "vtrig/common.h"
#include "vtrig/model.h"

namespace vtrig {
namespace {

ModelConfig SmallConfig() {
  ModelConfig cfg;
  cfg.input_dim = 12;
  cfg.d_model = 16;
  cfg.num_heads = 2;
  cfg.ffn_dim = 32;
  cfg.encoder_blocks = 3;
  cfg.decoder_blocks = 1;
  cfg.num_queries = 2;
  cfg.phoneme_classes = 6;
  cfg.speaker_classes = 5;
  cfg.tap_layer = 2;
  cfg.speaker_dropout = 0.4;
  return cfg;
}

Mat RandomFrames(int T, int dim, Rng* rng) {
  Mat m(T, dim);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < dim; ++f) m(t, f) = rng->Gaussian();
  }
  return m;
}

TEST_CASE("encoder emits one tap per block with the configured width") {
  ModelConfig cfg = SmallConfig();
  Rng rng(3);
  ModelParams params = ModelParams::Init(cfg, &rng);
  ad::Var x = ad::Constant(RandomFrames(10, cfg.input_dim, &rng));
  EncoderOutput out = EncoderForward(x, params);
  REQUIRE(static_cast<int>(out.taps.size()) == cfg.encoder_blocks);
  for (const ad::Var& tap : out.taps) {
    CHECK(tap->value.rows() == 10);
    CHECK(tap->value.cols() == cfg.d_model);
    CHECK(tap->value.allFinite());
  }
  CHECK(out.log_posteriors->value.rows() == 10);
  CHECK(out.log_posteriors->value.cols() == cfg.phoneme_classes);
}

TEST_CASE("phoneme posteriors exponentiate to unit row mass") {
  ModelConfig cfg = SmallConfig();
  Rng rng(5);
  ModelParams params = ModelParams::Init(cfg, &rng);
  ad::Var x = ad::Constant(RandomFrames(7, cfg.input_dim, &rng));
  EncoderOutput out = EncoderForward(x, params);
  Mat p = out.log_posteriors->value.array().exp();
  for (int t = 0; t < 7; ++t) {
    CHECK(p.row(t).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("attention weights are row-stochastic when retained") {
  ModelConfig cfg = SmallConfig();
  Rng rng(7);
  ModelParams params = ModelParams::Init(cfg, &rng);
  ad::Var x = ad::Constant(RandomFrames(6, cfg.input_dim, &rng));
  EncoderOutput out = EncoderForward(x, params, /*keep_attention=*/true);
  REQUIRE(static_cast<int>(out.attention.size()) == cfg.encoder_blocks);
  for (const std::vector<Mat>& heads : out.attention) {
    REQUIRE(static_cast<int>(heads.size()) == cfg.num_heads);
    for (const Mat& w : heads) {
      REQUIRE(w.rows() == 6);
      REQUIRE(w.cols() == 6);
      CHECK((w.array() >= 0.0).all());
      for (int r = 0; r < w.rows(); ++r) {
        CHECK(w.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("the encoder is deterministic and order-sensitive") {
  ModelConfig cfg = SmallConfig();
  Rng rng(11);
  ModelParams params = ModelParams::Init(cfg, &rng);
  Mat frames = RandomFrames(8, cfg.input_dim, &rng);

  EncoderOutput a = EncoderForward(ad::Constant(frames), params);
  EncoderOutput b = EncoderForward(ad::Constant(frames), params);
  CHECK(a.log_posteriors->value == b.log_posteriors->value);
  CHECK(a.taps.back()->value == b.taps.back()->value);

  // Positional encoding makes frame order matter.
  Mat swapped = frames;
  swapped.row(2).swap(swapped.row(5));
  EncoderOutput c = EncoderForward(ad::Constant(swapped), params);
  CHECK(a.log_posteriors->value != c.log_posteriors->value);
}

TEST_CASE("encoder rejects malformed input") {
  ModelConfig cfg = SmallConfig();
  Rng rng(13);
  ModelParams params = ModelParams::Init(cfg, &rng);
  CHECK_THROWS_AS(EncoderForward(ad::Constant(Mat(0, cfg.input_dim)), params),
                  std::invalid_argument);
  CHECK_THROWS_AS(EncoderForward(ad::Constant(Mat::Zero(4, cfg.input_dim + 1)),
                                 params),
                  std::invalid_argument);
}

TEST_CASE("the decoder embedding size does not depend on duration") {
  ModelConfig cfg = SmallConfig();
  Rng rng(17);
  ModelParams params = ModelParams::Init(cfg, &rng);
  for (int T : {1, 5, 50}) {
    ad::Var x = ad::Constant(RandomFrames(T, cfg.input_dim, &rng));
    EncoderOutput enc = EncoderForward(x, params);
    ad::Var emb = DecoderForward(enc.taps[cfg.tap_layer - 1], params);
    CHECK(emb->value.rows() == 1);
    CHECK(emb->value.cols() == cfg.EmbeddingDim());
    CHECK(emb->value.allFinite());
  }
  CHECK_THROWS_AS(DecoderForward(ad::Constant(Mat::Zero(4, cfg.d_model + 2)),
                                 params),
                  std::invalid_argument);
}

TEST_CASE("repeated decoding of the same tap is bitwise stable") {
  ModelConfig cfg = SmallConfig();
  Rng rng(19);
  ModelParams params = ModelParams::Init(cfg, &rng);
  ad::Var x = ad::Constant(RandomFrames(9, cfg.input_dim, &rng));
  EncoderOutput enc = EncoderForward(x, params);
  Mat e1 = DecoderForward(enc.taps[cfg.tap_layer - 1], params)->value;
  Mat e2 = DecoderForward(enc.taps[cfg.tap_layer - 1], params)->value;
  CHECK(e1 == e2);
}

TEST_CASE("the phrase head is the stated affine map") {
  ModelConfig cfg = SmallConfig();
  Rng rng(23);
  ModelParams params = ModelParams::Init(cfg, &rng);
  Mat e = RandomFrames(1, cfg.EmbeddingDim(), &rng);
  double logit = PhraseLogit(ad::Constant(e), params)->value(0, 0);
  // Independent dot product against the stored weights.
  double expect = params.phrase_b->value(0, 0);
  for (int i = 0; i < cfg.EmbeddingDim(); ++i) {
    expect += e(0, i) * params.phrase_w->value(i, 0);
  }
  CHECK(logit == doctest::Approx(expect).epsilon(1e-12));

  // Affine in the embedding.
  double twice = PhraseLogit(ad::Constant(Mat(2.0 * e)), params)->value(0, 0);
  double bias = params.phrase_b->value(0, 0);
  CHECK(twice - bias == doctest::Approx(2.0 * (logit - bias)).epsilon(1e-9));
}

TEST_CASE("speaker logits are a plain affine map outside training") {
  ModelConfig cfg = SmallConfig();
  Rng rng(29);
  ModelParams params = ModelParams::Init(cfg, &rng);
  Mat e = RandomFrames(1, cfg.EmbeddingDim(), &rng);
  Mat logits = SpeakerLogits(ad::Constant(e), params, false, nullptr)->value;
  REQUIRE(logits.cols() == cfg.speaker_classes);
  Mat expect = e * params.speaker_w->value + params.speaker_b->value;
  CHECK((logits - expect).cwiseAbs().maxCoeff() < 1e-12);

  // Zero dropout in training mode collapses to the same map.
  ModelConfig nodrop = cfg;
  nodrop.speaker_dropout = 0.0;
  Rng rng2(29);
  ModelParams p2 = ModelParams::Init(nodrop, &rng2);
  Rng mask_rng(1);
  Mat trained = SpeakerLogits(ad::Constant(e), p2, true, &mask_rng)->value;
  Mat evaled = SpeakerLogits(ad::Constant(e), p2, false, nullptr)->value;
  CHECK(trained == evaled);
}

TEST_CASE("dropout is unbiased over many masks") {
  ModelConfig cfg = SmallConfig();
  Rng rng(31);
  ModelParams params = ModelParams::Init(cfg, &rng);
  Mat e = RandomFrames(1, cfg.EmbeddingDim(), &rng);
  Mat eval = SpeakerLogits(ad::Constant(e), params, false, nullptr)->value;
  Mat bias = params.speaker_b->value;

  Rng mask_rng(77);
  Mat mean = Mat::Zero(1, cfg.speaker_classes);
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    mean += SpeakerLogits(ad::Constant(e), params, true, &mask_rng)->value;
  }
  mean /= static_cast<double>(trials);
  // Inverted scaling keeps the expectation at the evaluation output.  The
  // bias is deterministic, so compare the weight contribution alone.
  double scale = (eval - bias).cwiseAbs().maxCoeff();
  CHECK((mean - eval).cwiseAbs().maxCoeff() < 0.02 * scale);
  CHECK_THROWS_AS(SpeakerLogits(ad::Constant(e), params, true, nullptr),
                  std::invalid_argument);
}

TEST_CASE("an undimensioned speaker head refuses to score") {
  ModelConfig cfg = SmallConfig();
  cfg.speaker_classes = 0;
  Rng rng(37);
  ModelParams params = ModelParams::Init(cfg, &rng);
  Mat e = Mat::Zero(1, cfg.EmbeddingDim());
  CHECK_THROWS_AS(SpeakerLogits(ad::Constant(e), params, false, nullptr),
                  std::invalid_argument);
}

TEST_CASE("resizing the speaker head reinitializes only on a real change") {
  ModelConfig cfg = SmallConfig();
  Rng rng(41);
  ModelParams params = ModelParams::Init(cfg, &rng);
  Mat before = params.speaker_w->value;

  Rng resize_rng(5);
  ResizeSpeakerHead(&params, cfg.speaker_classes, &resize_rng);
  CHECK(params.speaker_w->value == before);  // same size, untouched

  ResizeSpeakerHead(&params, cfg.speaker_classes + 3, &resize_rng);
  CHECK(params.cfg.speaker_classes == cfg.speaker_classes + 3);
  CHECK(params.speaker_w->value.cols() == cfg.speaker_classes + 3);
  CHECK(params.speaker_w->value.rows() == cfg.EmbeddingDim());
  CHECK((params.speaker_b->value.array() == 0.0).all());
  CHECK_THROWS_AS(ResizeSpeakerHead(&params, 0, &resize_rng),
                  std::invalid_argument);
}

TEST_CASE("positional encoding interleaves sine and cosine by rate") {
  Mat pe = PositionalEncoding(4, 6);
  REQUIRE(pe.rows() == 4);
  REQUIRE(pe.cols() == 6);
  // t = 0: sin components are 0, cos components are 1.
  for (int i = 0; i < 3; ++i) {
    CHECK(pe(0, 2 * i) == 0.0);
    CHECK(pe(0, 2 * i + 1) == 1.0);
  }
  for (int t = 0; t < 4; ++t) {
    for (int i = 0; i < 3; ++i) {
      double rate = std::pow(10000.0, -2.0 * i / 6.0);
      CHECK(pe(t, 2 * i) == doctest::Approx(std::sin(t * rate)).epsilon(1e-12));
      CHECK(pe(t, 2 * i + 1) ==
            doctest::Approx(std::cos(t * rate)).epsilon(1e-12));
    }
  }
}

TEST_CASE("named tensors cover the parameter set and find by name") {
  ModelConfig cfg = SmallConfig();
  Rng rng(43);
  ModelParams params = ModelParams::Init(cfg, &rng);
  auto named = params.NamedTensors();
  CHECK(named.size() > 20);
  for (const auto& [name, var] : named) {
    CHECK(params.Find(name) == var);
    CHECK(var->value.allFinite());
  }
  CHECK(params.Find("queries")->value.rows() == cfg.num_queries);
  CHECK(params.Find("metric.a")->value(0, 0) == 1.0);
  CHECK(params.Find("metric.b")->value(0, 0) == 0.0);
  CHECK_THROWS_AS(params.Find("no_such_tensor"), std::invalid_argument);

  // Group predicate separates the frozen stack from the rest.
  CHECK(InEncoderGroup("encoder.0.att.wq"));
  CHECK(InEncoderGroup("input_proj.w"));
  CHECK(InEncoderGroup("phoneme_head.w"));
  CHECK(!InEncoderGroup("decoder.0.cross.wq"));
  CHECK(!InEncoderGroup("queries"));
  CHECK(!InEncoderGroup("metric.a"));
}

TEST_CASE("config validation rejects inconsistent shapes") {
  ModelConfig cfg = SmallConfig();
  cfg.Validate();

  ModelConfig bad = cfg;
  bad.d_model = 15;  // not divisible by heads
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  bad = cfg;
  bad.tap_layer = cfg.encoder_blocks + 1;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  bad = cfg;
  bad.tap_layer = 0;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  bad = cfg;
  bad.speaker_dropout = 1.0;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  bad = cfg;
  bad.phoneme_classes = 1;  // needs at least one phoneme plus blank
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
}

TEST_CASE("identical seeds initialize identical parameters") {
  ModelConfig cfg = SmallConfig();
  Rng a(99), b(99);
  ModelParams pa = ModelParams::Init(cfg, &a);
  ModelParams pb = ModelParams::Init(cfg, &b);
  for (const auto& [name, var] : pa.NamedTensors()) {
    CHECK(var->value == pb.Find(name)->value);
  }
}

}  // namespace
}  // namespace vtrig
