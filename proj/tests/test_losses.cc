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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "vtrig/common.h"
#include "vtrig/losses.h"

namespace vtrig {
namespace {

Vec V(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

TEST_CASE("phrase cross entropy hits its closed-form values") {
  CHECK(PhraseCe(0.0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(PhraseCe(0.0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // -log(sigmoid(20)) = log(1 + e^-20) ~ 2.06e-9.
  CHECK(PhraseCe(20.0, 1) ==
        doctest::Approx(std::log1p(std::exp(-20.0))).epsilon(1e-9));
  // Symmetry under logit negation with flipped label.
  for (double z : {-35.0, -3.0, -0.25, 0.7, 4.0, 50.0}) {
    CHECK(PhraseCe(z, 1) == doctest::Approx(PhraseCe(-z, 0)).epsilon(1e-12));
  }
  // Extreme logits stay finite.
  CHECK(std::isfinite(PhraseCe(1000.0, 0)));
  CHECK(std::isfinite(PhraseCe(-1000.0, 1)));
}

TEST_CASE("speaker cross entropy matches a direct softmax evaluation") {
  Vec logits = V({0.3, -1.2, 2.0, 0.0});
  for (int k = 0; k < 4; ++k) {
    // Direct arithmetic, no shared helpers.
    double z = 0.0;
    for (int j = 0; j < 4; ++j) z += std::exp(logits(j));
    double expect = -(logits(k) - std::log(z));
    CHECK(SpeakerCe(logits, k) == doctest::Approx(expect).epsilon(1e-12));
  }
  Vec uniform = Vec::Zero(7);
  CHECK(SpeakerCe(uniform, 3) == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  CHECK_THROWS_AS(SpeakerCe(logits, 4), std::invalid_argument);
  CHECK_THROWS_AS(SpeakerCe(logits, -1), std::invalid_argument);
}

TEST_CASE("calibrated similarity hits the three cosine fixed points") {
  Vec e = V({1.0, 2.0, -0.5});
  Vec anti = -e;
  Vec orth = V({2.0, -1.0, 0.0});  // orthogonal to e
  REQUIRE(e.dot(orth) == 0.0);
  const double eps = 1e-6;
  CHECK(Similarity(e, e, 1.0, 0.0) == 1.0 - eps);
  CHECK(Similarity(e, anti, 1.0, 0.0) == eps);
  CHECK(Similarity(e, orth, 1.0, 0.0) == 0.5);
}

TEST_CASE("similarity is scale-invariant and rejects zero norms") {
  Vec a = V({0.2, -1.0, 3.0});
  Vec b = V({1.5, 0.4, -0.7});
  double s = Similarity(a, b, 1.3, 0.1);
  CHECK(Similarity(a * 10.0, b * 0.25, 1.3, 0.1) ==
        doctest::Approx(s).epsilon(1e-12));
  CHECK_THROWS_AS(Similarity(Vec::Zero(3), b, 1.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("the metric loss reproduces the hand-computed example") {
  // One positive pair at P = 0.8 and one negative at P = 0.3.  With a = 1 and
  // b = 0 the raw value is (cos + 1) / 2, so cos = 0.6 and cos = -0.4 land on
  // those probabilities exactly.
  Vec base = V({1.0, 0.0});
  Vec pos = V({0.6, 0.8});    // cos against base = 0.6
  Vec neg = V({-0.4, std::sqrt(1.0 - 0.16)});  // cos = -0.4
  CHECK(Similarity(base, pos, 1.0, 0.0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(Similarity(base, neg, 1.0, 0.0) == doctest::Approx(0.3).epsilon(1e-12));

  PairSets pairs;
  pairs.positives = {{0, 1}};
  pairs.negatives = {{0, 2}};
  double loss = MetricLoss({base, pos, neg}, pairs, 1.0, 0.0);
  CHECK(std::abs(loss - 0.5798184952529422) < 1e-12);
  CHECK(loss == doctest::Approx(-std::log(0.8) - std::log(0.7)).epsilon(1e-12));
}

TEST_CASE("empty pair sets contribute nothing") {
  std::vector<Vec> embs = {V({1.0, 0.0}), V({0.0, 1.0})};
  CHECK(MetricLoss(embs, PairSets{}, 1.0, 0.0) == 0.0);

  PairSets only_pos;
  only_pos.positives = {{0, 1}};
  double lp = MetricLoss(embs, only_pos, 1.0, 0.0);
  CHECK(lp == doctest::Approx(-std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("each side of the metric loss averages over its own pairs") {
  // Three positives, one negative: doubling a pair set must not change the
  // other side's contribution.
  std::vector<Vec> embs = {V({1.0, 0.1}), V({0.9, 0.2}), V({0.8, 0.3}),
                           V({-1.0, 0.4})};
  PairSets pairs;
  pairs.positives = {{0, 1}, {0, 2}, {1, 2}};
  pairs.negatives = {{0, 3}};
  double pos_sum = 0.0;
  for (auto [i, j] : pairs.positives) {
    pos_sum += -std::log(Similarity(embs[i], embs[j], 1.0, 0.0));
  }
  double neg = -std::log(1.0 - Similarity(embs[0], embs[3], 1.0, 0.0));
  CHECK(MetricLoss(embs, pairs, 1.0, 0.0) ==
        doctest::Approx(pos_sum / 3.0 + neg).epsilon(1e-12));
}

TEST_CASE("metric gradients agree with central finite differences") {
  Rng rng(53);
  std::vector<Vec> embs;
  for (int i = 0; i < 5; ++i) {
    Vec e(4);
    for (int d = 0; d < 4; ++d) e(d) = rng.Gaussian();
    embs.push_back(e);
  }
  PairSets pairs;
  pairs.positives = {{0, 1}, {2, 3}};
  pairs.negatives = {{0, 4}, {1, 3}, {2, 4}};
  const double a = 1.2, b = -0.1, h = 1e-6;

  MetricLossResult res = MetricLossWithGrad(embs, pairs, a, b);
  CHECK(res.loss == doctest::Approx(MetricLoss(embs, pairs, a, b)).epsilon(1e-12));
  REQUIRE(res.d_embeddings.size() == embs.size());

  for (size_t i = 0; i < embs.size(); ++i) {
    for (int d = 0; d < 4; ++d) {
      std::vector<Vec> hi = embs, lo = embs;
      hi[i](d) += h;
      lo[i](d) -= h;
      double fd =
          (MetricLoss(hi, pairs, a, b) - MetricLoss(lo, pairs, a, b)) / (2 * h);
      CHECK(res.d_embeddings[i](d) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
  double fda =
      (MetricLoss(embs, pairs, a + h, b) - MetricLoss(embs, pairs, a - h, b)) /
      (2 * h);
  double fdb =
      (MetricLoss(embs, pairs, a, b + h) - MetricLoss(embs, pairs, a, b - h)) /
      (2 * h);
  CHECK(res.da == doctest::Approx(fda).epsilon(1e-6));
  CHECK(res.db == doctest::Approx(fdb).epsilon(1e-6));
}

TEST_CASE("clamped pairs stop contributing gradient") {
  // a = 1, b = 0 with identical embeddings clamps P to 1 - 1e-6; the pair's
  // gradient is defined to vanish there.
  std::vector<Vec> embs = {V({1.0, 0.0}), V({1.0, 0.0})};
  PairSets pairs;
  pairs.positives = {{0, 1}};
  MetricLossResult res = MetricLossWithGrad(embs, pairs, 1.0, 0.0);
  CHECK(res.d_embeddings[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.d_embeddings[1].cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.da == 0.0);
  CHECK(res.db == 0.0);
}

TEST_CASE("pair construction follows the speaker and label rules") {
  auto item = [](int spk, int label) {
    PairItem it;
    it.speaker = spk;
    it.phrase_label = label;
    return it;
  };

  // Two keyword utterances, same speaker: one positive.
  PairSets p = BuildPairs({item(0, 1), item(0, 1)});
  CHECK(p.positives.size() == 1);
  CHECK(p.negatives.empty());

  // Two keyword utterances, different speakers: one negative.
  p = BuildPairs({item(0, 1), item(1, 1)});
  CHECK(p.positives.empty());
  CHECK(p.negatives.size() == 1);

  // Same speaker, opposite labels: one negative.
  p = BuildPairs({item(0, 1), item(0, 0)});
  CHECK(p.positives.empty());
  CHECK(p.negatives.size() == 1);

  // Same speaker, both non-keyword: no signal either way.
  p = BuildPairs({item(0, 0), item(0, 0)});
  CHECK(p.positives.empty());
  CHECK(p.negatives.empty());

  // Anonymous utterances act as distinct speakers.
  PairItem anon;
  anon.phrase_label = 1;
  p = BuildPairs({anon, anon});
  CHECK(p.positives.empty());
  CHECK(p.negatives.size() == 1);
}

TEST_CASE("strict pairing drops cross-speaker non-keyword pairs") {
  auto item = [](int spk, int label) {
    PairItem it;
    it.speaker = spk;
    it.phrase_label = label;
    return it;
  };
  std::vector<PairItem> items = {item(0, 0), item(1, 0), item(2, 1)};
  PairSets loose = BuildPairs(items, false);
  // {0,1} both non-keyword across speakers, plus two keyword-vs-other pairs.
  CHECK(loose.negatives.size() == 3);
  PairSets strict = BuildPairs(items, true);
  CHECK(strict.negatives.size() == 2);
  for (auto [i, j] : strict.negatives) {
    CHECK((items[i].phrase_label == 1 || items[j].phrase_label == 1));
  }
}

TEST_CASE("the full speaker-batch pair count matches the combinatorics") {
  // 28 speakers x 4 keyword utterances: 28 * C(4,2) positives, all cross
  // speaker pairs negative.
  std::vector<PairItem> items;
  for (int s = 0; s < 28; ++s) {
    for (int u = 0; u < 4; ++u) {
      PairItem it;
      it.speaker = s;
      it.phrase_label = 1;
      items.push_back(it);
    }
  }
  PairSets p = BuildPairs(items);
  CHECK(p.positives.size() == 28 * 6);
  const size_t all = items.size() * (items.size() - 1) / 2;
  CHECK(p.negatives.size() == all - 28 * 6);
}

TEST_CASE("negative subsampling balances the two sides") {
  Rng rng(61);
  PairSets pairs;
  for (int i = 0; i < 3; ++i) pairs.positives.push_back({i, i + 10});
  for (int i = 0; i < 100; ++i) pairs.negatives.push_back({i, i + 200});

  PairSets cut = SubsampleNegatives(pairs, &rng);
  CHECK(cut.positives.size() == 3);
  CHECK(cut.negatives.size() == 3);
  // The kept negatives are a subset of the originals.
  std::set<std::pair<int, int>> pool(pairs.negatives.begin(),
                                     pairs.negatives.end());
  for (auto& pr : cut.negatives) CHECK(pool.count(pr) == 1);

  // Already balanced or negative-light sets pass through unchanged.
  PairSets light;
  light.positives = pairs.positives;
  light.negatives = {{0, 1}};
  PairSets same = SubsampleNegatives(light, &rng);
  CHECK(same.negatives == light.negatives);

  // Determinism under a fixed seed.
  Rng r1(9), r2(9);
  CHECK(SubsampleNegatives(pairs, &r1).negatives ==
        SubsampleNegatives(pairs, &r2).negatives);
}

TEST_CASE("combined losses apply the published weights") {
  LossWeights w;
  w.alpha = 1.0;
  w.beta = 1.0;
  w.gamma = 0.1;
  LossBreakdown b = CombineLosses(1.0, 2.0, 3.0, 4.0, w);
  CHECK(b.total == doctest::Approx(6.4).epsilon(1e-12));
  CHECK(b.phone == 1.0);
  CHECK(b.phrase == 2.0);
  CHECK(b.spkr == 3.0);
  CHECK(b.metric == 4.0);

  LossWeights off;
  off.alpha = 0.5;
  off.beta = 0.0;
  off.gamma = 0.0;
  CHECK(CombineLosses(2.0, 4.0, 100.0, 100.0, off).total ==
        doctest::Approx(4.0).epsilon(1e-12));
}

}  // namespace
}  // namespace vtrig
