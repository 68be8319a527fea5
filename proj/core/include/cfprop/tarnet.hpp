#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfprop/matrix.hpp"
#include "cfprop/rng.hpp"

namespace cfprop {

/// Network sizes: shared ReLU trunk widths, then per-head hidden widths.
/// Each head always ends in a single linear output unit; defaults mirror a
/// one-hidden-layer trunk with purely linear heads.
struct ArchSpec {
  std::vector<std::size_t> shared_widths{64};
  std::vector<std::size_t> head_widths{};

  void validate() const;
  bool operator==(const ArchSpec&) const = default;
};

struct DenseLayer {
  Matrix w;  // in x out
  std::vector<double> b;
};

/// Two-headed outcome model: a shared ReLU trunk feeding one linear-output
/// head per treatment arm.
struct TarnetParams {
  std::size_t input_dim = 0;
  ArchSpec arch;
  std::uint64_t init_seed = 0;
  std::vector<DenseLayer> shared;
  std::vector<DenseLayer> head0;
  std::vector<DenseLayer> head1;
};

/// Gradient (or moment) buffers congruent with TarnetParams.
struct TarnetGrads {
  std::vector<DenseLayer> shared;
  std::vector<DenseLayer> head0;
  std::vector<DenseLayer> head1;

  void set_zero();
  /// this += alpha * other
  void axpy(double alpha, const TarnetGrads& other);
};

TarnetGrads zeros_like(const TarnetParams& params);

/// Named view over one parameter (or gradient) block, e.g. "shared[0].w".
struct ParamBlock {
  std::string name;
  double* data;
  std::size_t size;
};

std::vector<ParamBlock> param_blocks(TarnetParams& params);
std::vector<ParamBlock> param_blocks(TarnetGrads& grads);
std::size_t param_count(const TarnetParams& params);

/// Glorot-uniform weights, zero biases; layer draw order is shared, head0,
/// head1, row-major within each weight matrix.
TarnetParams init_params(std::size_t input_dim, const ArchSpec& arch, Rng& rng);

/// Pre-activations and activations of one batch pass, kept for backprop.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> shared_pre, shared_act;
  std::array<std::vector<Matrix>, 2> head_pre, head_act;
};

struct ForwardResult {
  std::vector<double> pred0;
  std::vector<double> pred1;
  ForwardCache cache;
};

/// One shared-trunk pass feeding both heads. Rejects non-finite inputs.
ForwardResult forward_both(const TarnetParams& params, const Matrix& x);

/// Predictions of a single arm (the cache still covers both heads).
std::vector<double> forward(const TarnetParams& params, const Matrix& x, int arm);

/// f(x,1) - f(x,0) per row, from one forward_both pass.
std::vector<double> predict_ite(const TarnetParams& params, const Matrix& x);

/// Backpropagates dL/dpred for both arms through the cached pass,
/// accumulating into grads.
void backward_both(const TarnetParams& params, const ForwardCache& cache,
                   std::span<const double> dpred0, std::span<const double> dpred1,
                   TarnetGrads& grads);

/// JSON checkpoint: magic header, format version, arch, init seed, and
/// row-major layer data.
void save_checkpoint(const TarnetParams& params, const std::string& path);
TarnetParams load_checkpoint(const std::string& path);

}  // namespace cfprop
