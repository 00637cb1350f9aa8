#include "floodrisknet/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "floodrisknet/errors.hpp"

namespace frn {

void adam_update(Parameter& p, const AdamOptions& opt) {
  if (opt.learning_rate <= 0.0) {
    throw std::invalid_argument("adam_update: learning rate must be positive");
  }
  if (!p.grad.same_shape(p.value)) {
    throw std::invalid_argument("adam_update: gradient shape mismatch for " + p.name);
  }
  p.step += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(p.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(p.step));
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double g = p.grad.data()[i];
    double& m = p.moment1.data()[i];
    double& v = p.moment2.data()[i];
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    p.value.data()[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
  check_finite(p.value, "adam_update");
}

void adam_update_all(std::vector<Parameter*>& params, const AdamOptions& opt) {
  for (Parameter* p : params) adam_update(*p, opt);
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
  return m;
}

}  // namespace frn
