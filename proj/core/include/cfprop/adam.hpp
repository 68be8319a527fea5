#pragma once

#include <cstddef>
#include <vector>

#include "cfprop/tarnet.hpp"

namespace cfprop {

/// Adam moment buffers, flattened in param_blocks order.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  static AdamState create(const TarnetParams& params, double lr = 1e-3);
};

/// One bias-corrected Adam update. Throws on non-finite gradients, naming
/// the offending parameter block.
void adam_step(AdamState& state, TarnetParams& params, TarnetGrads& grads);

}  // namespace cfprop
