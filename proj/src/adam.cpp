#include <cmath>

#include "uglad/errors.hpp"
#include "uglad/fit.hpp"

namespace uglad {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam_step: parameter and gradient sizes differ");
  }
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam_step: accumulator size differs from parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
    state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.first_moment[i] / c1;
    const double v_hat = state.second_moment[i] / c2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace uglad
