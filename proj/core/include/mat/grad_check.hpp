#pragma once

#include <functional>
#include <vector>

#include "mat/matrix.hpp"

namespace mat {

/// Verifies analytic gradients against central finite differences.
///
/// loss_fn(true) must recompute the scalar loss from the current parameter
/// values and accumulate analytic gradients into each Parameter's grad field
/// (grads are reset beforehand). loss_fn(false) recomputes the loss only.
/// The loss must be deterministic: dropout and any other randomness disabled.
///
/// Returns max over all parameter entries of
///   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double grad_check(const std::function<double(bool accumulate_grads)>& loss_fn,
                  const std::vector<Parameter*>& params,
                  double epsilon = 1e-5);

}  // namespace mat
