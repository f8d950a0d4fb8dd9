#include "mat/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace mat {

double grad_check(const std::function<double(bool)>& loss_fn,
                  const std::vector<Parameter*>& params, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("grad_check: epsilon must be positive");

  for (Parameter* p : params) p->reset_grad();
  const double base_loss = loss_fn(true);
  if (!std::isfinite(base_loss)) throw std::runtime_error("grad_check: non-finite loss");

  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  double max_rel_err = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Matrix& value = params[pi]->value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + epsilon;
      const double loss_plus = loss_fn(false);
      value[i] = saved - epsilon;
      const double loss_minus = loss_fn(false);
      value[i] = saved;
      if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus))
        throw std::runtime_error("grad_check: non-finite loss at perturbed point");

      const double numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) /
                         std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (rel > max_rel_err) max_rel_err = rel;
    }
  }
  return max_rel_err;
}

}  // namespace mat
