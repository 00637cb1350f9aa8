// Bias-corrected Adam. The update is deterministic: identical parameter,
// gradient, and state produce bit-identical results.

#pragma once

#include "floodrisknet/autodiff.hpp"
#include "floodrisknet/rng.hpp"

namespace frn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void adam_update(Parameter& p, const AdamOptions& opt);

void adam_update_all(std::vector<Parameter*>& params, const AdamOptions& opt);

// Glorot/Xavier uniform initialization, deterministic per Rng state.
Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace frn
