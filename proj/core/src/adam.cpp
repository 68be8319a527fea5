#include "cfprop/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace cfprop {

AdamState AdamState::create(const TarnetParams& params, double lr) {
  AdamState s;
  s.lr = lr;
  s.m.assign(param_count(params), 0.0);
  s.v.assign(param_count(params), 0.0);
  return s;
}

void adam_step(AdamState& state, TarnetParams& params, TarnetGrads& grads) {
  const auto pblocks = param_blocks(params);
  const auto gblocks = param_blocks(grads);
  if (pblocks.size() != gblocks.size()) {
    throw std::invalid_argument("adam_step: gradient buffers not congruent with parameters");
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  std::size_t offset = 0;
  for (std::size_t blk = 0; blk < pblocks.size(); ++blk) {
    if (pblocks[blk].size != gblocks[blk].size) {
      throw std::invalid_argument("adam_step: shape mismatch in block " + pblocks[blk].name);
    }
    double* p = pblocks[blk].data;
    const double* g = gblocks[blk].data;
    for (std::size_t i = 0; i < pblocks[blk].size; ++i) {
      if (!std::isfinite(g[i])) {
        throw std::runtime_error("adam_step: non-finite gradient in block " +
                                 pblocks[blk].name);
      }
      double& m = state.m[offset + i];
      double& v = state.v[offset + i];
      m = state.beta1 * m + (1.0 - state.beta1) * g[i];
      v = state.beta2 * v + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    offset += pblocks[blk].size;
  }
  if (offset != state.m.size()) {
    throw std::invalid_argument("adam_step: state buffers not congruent with parameters");
  }
}

}  // namespace cfprop
