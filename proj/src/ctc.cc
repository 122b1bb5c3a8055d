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

#include "vtrig/ctc.h"

namespace vtrig {

namespace {

// Blank-extended label sequence: blank, l1, blank, l2, ..., lL, blank.
std::vector<int> Extend(const std::vector<int>& labels, int blank) {
  std::vector<int> ext(2 * labels.size() + 1, blank);
  for (size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
  return ext;
}

void ValidateInputs(const Mat& log_probs, const std::vector<int>& labels,
                    int blank) {
  const int C = static_cast<int>(log_probs.cols());
  if (log_probs.rows() == 0 || C == 0) {
    throw std::invalid_argument("ctc: empty log_probs");
  }
  if (blank < 0 || blank >= C) {
    throw std::invalid_argument("ctc: blank index out of range");
  }
  for (int l : labels) {
    if (l < 0 || l >= C) throw std::invalid_argument("ctc: label out of range");
    if (l == blank) throw std::invalid_argument("ctc: label equals blank");
  }
}

int MinFrames(const std::vector<int>& labels) {
  int need = static_cast<int>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++need;  // repeat requires a blank between
  }
  return need;
}

// Forward variables including the emission at frame t, log domain.
// alpha(t, s) = log P(emitting frames 0..t and being at extended position s).
Mat ForwardAlpha(const Mat& lp, const std::vector<int>& ext, int blank) {
  const int T = static_cast<int>(lp.rows());
  const int S = static_cast<int>(ext.size());
  Mat alpha = Mat::Constant(T, S, kNegInf);
  alpha(0, 0) = lp(0, ext[0]);
  if (S > 1) alpha(0, 1) = lp(0, ext[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = LogSumExp(a, alpha(t - 1, s - 1));
      if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]) {
        a = LogSumExp(a, alpha(t - 1, s - 2));
      }
      if (a != kNegInf) alpha(t, s) = a + lp(t, ext[s]);
    }
  }
  return alpha;
}

// Backward variables including the emission at frame t.
Mat BackwardBeta(const Mat& lp, const std::vector<int>& ext, int blank) {
  const int T = static_cast<int>(lp.rows());
  const int S = static_cast<int>(ext.size());
  Mat beta = Mat::Constant(T, S, kNegInf);
  beta(T - 1, S - 1) = lp(T - 1, ext[S - 1]);
  if (S > 1) beta(T - 1, S - 2) = lp(T - 1, ext[S - 2]);
  for (int t = T - 2; t >= 0; --t) {
    for (int s = S - 1; s >= 0; --s) {
      double b = beta(t + 1, s);
      if (s + 1 < S) b = LogSumExp(b, beta(t + 1, s + 1));
      if (s + 2 < S && ext[s + 2] != blank && ext[s + 2] != ext[s]) {
        b = LogSumExp(b, beta(t + 1, s + 2));
      }
      if (b != kNegInf) beta(t, s) = b + lp(t, ext[s]);
    }
  }
  return beta;
}

double TotalLogProb(const Mat& alpha, int S) {
  const int T = static_cast<int>(alpha.rows());
  double lpz = alpha(T - 1, S - 1);
  if (S > 1) lpz = LogSumExp(lpz, alpha(T - 1, S - 2));
  return lpz;
}

}  // namespace

double CtcLoss(const Mat& log_probs, const std::vector<int>& labels, int blank) {
  ValidateInputs(log_probs, labels, blank);
  if (static_cast<int>(log_probs.rows()) < MinFrames(labels)) {
    throw CtcUnalignableError("ctc: label sequence longer than frame budget");
  }
  std::vector<int> ext = Extend(labels, blank);
  Mat alpha = ForwardAlpha(log_probs, ext, blank);
  double lpz = TotalLogProb(alpha, static_cast<int>(ext.size()));
  if (lpz == kNegInf) {
    throw CtcUnalignableError("ctc: no feasible alignment");
  }
  return -lpz;
}

Mat CtcGrad(const Mat& log_probs, const std::vector<int>& labels, int blank,
            double* loss_out) {
  ValidateInputs(log_probs, labels, blank);
  if (static_cast<int>(log_probs.rows()) < MinFrames(labels)) {
    throw CtcUnalignableError("ctc: label sequence longer than frame budget");
  }
  const int T = static_cast<int>(log_probs.rows());
  const int C = static_cast<int>(log_probs.cols());
  std::vector<int> ext = Extend(labels, blank);
  const int S = static_cast<int>(ext.size());

  Mat alpha = ForwardAlpha(log_probs, ext, blank);
  double lpz = TotalLogProb(alpha, S);
  if (lpz == kNegInf) {
    throw CtcUnalignableError("ctc: no feasible alignment");
  }
  Mat beta = BackwardBeta(log_probs, ext, blank);

  // Both alpha and beta include the emission at t, so the posterior mass of
  // paths through (t, s) is alpha + beta - logp(t, ext[s]).  Accumulate per
  // class in the log domain, then d(-log p)/d logp(t, k) = -exp(acc - lpz).
  Mat grad = Mat::Zero(T, C);
  for (int t = 0; t < T; ++t) {
    std::vector<double> acc(C, kNegInf);
    for (int s = 0; s < S; ++s) {
      double ab = alpha(t, s);
      if (ab == kNegInf || beta(t, s) == kNegInf) continue;
      double v = ab + beta(t, s) - log_probs(t, ext[s]);
      acc[ext[s]] = LogSumExp(acc[ext[s]], v);
    }
    for (int k = 0; k < C; ++k) {
      if (acc[k] != kNegInf) grad(t, k) = -std::exp(acc[k] - lpz);
    }
  }
  if (loss_out != nullptr) *loss_out = -lpz;
  return grad;
}

double CtcKeywordScore(const Mat& log_probs, const std::vector<int>& labels,
                       int blank) {
  try {
    double loss = CtcLoss(log_probs, labels, blank);
    return -loss / static_cast<double>(log_probs.rows());
  } catch (const CtcUnalignableError&) {
    return kNegInf;
  }
}

ad::Var CtcLossNode(ad::Var log_probs, const std::vector<int>& labels,
                    int blank) {
  double loss = 0.0;
  Mat grad;
  if (ad::GradEnabled()) {
    grad = CtcGrad(log_probs->value, labels, blank, &loss);
  } else {
    loss = CtcLoss(log_probs->value, labels, blank);
  }
  Mat y(1, 1);
  y(0, 0) = loss;
  ad::Var out = ad::Leaf(y, false);
  if (ad::GradEnabled() && log_probs->requires_grad) {
    out->requires_grad = true;
    out->parents = {log_probs};
    ad::Node* o = out.get();
    out->backward = [log_probs, grad, o]() {
      log_probs->AccumGrad(o->grad(0, 0) * grad);
    };
  }
  return out;
}

std::vector<int> GreedyCtcDecode(const Mat& log_probs, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    Eigen::Index k;
    log_probs.row(t).maxCoeff(&k);
    int cls = static_cast<int>(k);
    if (cls != prev && cls != blank) out.push_back(cls);
    prev = cls;
  }
  return out;
}

}  // namespace vtrig
