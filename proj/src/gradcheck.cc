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

#include "vtrig/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace vtrig {

GradCheckReport CheckGradients(
    const std::function<double()>& loss_fn,
    const std::vector<std::pair<std::string, ad::Var>>& tensors,
    const GradCheckOptions& opt, Rng* rng) {
  if (opt.step <= 0.0) throw std::invalid_argument("grad check: bad step");
  if (rng == nullptr) throw std::invalid_argument("grad check: null rng");
  GradCheckReport report;
  for (const auto& [name, var] : tensors) {
    Mat& value = var->value;
    const int rows = static_cast<int>(value.rows());
    const int cols = static_cast<int>(value.cols());
    const bool has_grad = var->has_grad();

    std::set<std::pair<int, int>> coords;
    for (int k = 0; k < opt.coords_per_tensor; ++k) {
      coords.insert({rng->UniformInt(rows), rng->UniformInt(cols)});
    }
    if (has_grad) {
      int br = 0, bc = 0;
      var->grad.cwiseAbs().maxCoeff(&br, &bc);
      coords.insert({br, bc});
    }

    for (const auto& [r, c] : coords) {
      const double v0 = value(r, c);
      value(r, c) = v0 + opt.step;
      const double up = loss_fn();
      value(r, c) = v0 - opt.step;
      const double down = loss_fn();
      value(r, c) = v0;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double analytic = has_grad ? var->grad(r, c) : 0.0;
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), opt.denom_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = {name, r, c, analytic, numeric, rel};
      }
    }
  }
  return report;
}

}  // namespace vtrig
