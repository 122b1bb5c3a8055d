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

#ifndef VTRIG_GRADCHECK_H_
#define VTRIG_GRADCHECK_H_

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vtrig/autodiff.h"
#include "vtrig/common.h"

namespace vtrig {

struct GradCheckOptions {
  int coords_per_tensor = 4;  // random coordinates, plus the largest-|g| one
  double step = 1e-5;         // central difference half-width
  // Relative error denominator floor; keeps finite-difference noise on
  // near-zero coordinates from dominating the report.
  double denom_floor = 1e-5;
};

struct GradCheckEntry {
  std::string tensor;
  int row = 0, col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  GradCheckEntry worst;
  int coords_checked = 0;
};

// Compares the gradients already accumulated in `tensors` against central
// differences of `loss_fn`, which must re-evaluate the loss from the tensors'
// current values (it is called with values perturbed in place and restored
// afterwards).  Tensors without an accumulated gradient count as zero.
GradCheckReport CheckGradients(
    const std::function<double()>& loss_fn,
    const std::vector<std::pair<std::string, ad::Var>>& tensors,
    const GradCheckOptions& opt, Rng* rng);

}  // namespace vtrig

#endif  // VTRIG_GRADCHECK_H_
