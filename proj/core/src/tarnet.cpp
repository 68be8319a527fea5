#include "cfprop/tarnet.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace cfprop {

namespace {

constexpr const char* kCheckpointMagic = "cfprop.tarnet";
constexpr int kCheckpointVersion = 1;

std::vector<std::size_t> layer_dims(std::size_t input_dim, const std::vector<std::size_t>& widths,
                                    bool scalar_output) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), widths.begin(), widths.end());
  if (scalar_output) dims.push_back(1);
  return dims;
}

// pre = act_in * W + b
Matrix affine(const Matrix& act_in, const DenseLayer& layer) {
  Matrix pre = matmul(act_in, layer.w);
  for (std::size_t i = 0; i < pre.rows(); ++i)
    for (std::size_t j = 0; j < pre.cols(); ++j) pre(i, j) += layer.b[j];
  return pre;
}

Matrix relu(const Matrix& pre) {
  Matrix act = pre;
  for (auto& v : act.data()) v = v > 0.0 ? v : 0.0;
  return act;
}

// Runs one head on the shared representation; layers before the last apply
// ReLU, the last is linear.
void run_head(const std::vector<DenseLayer>& layers, const Matrix& rep,
              std::vector<Matrix>& pre_out, std::vector<Matrix>& act_out) {
  const Matrix* cur = &rep;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    pre_out.push_back(affine(*cur, layers[l]));
    const bool last = (l + 1 == layers.size());
    act_out.push_back(last ? pre_out.back() : relu(pre_out.back()));
    cur = &act_out.back();
  }
}

// delta has the layer's output shape; accumulates dW, db and returns the
// gradient w.r.t. the layer input.
Matrix backprop_layer(const Matrix& act_in, const DenseLayer& layer, const Matrix& delta,
                      DenseLayer& grad) {
  for (std::size_t i = 0; i < act_in.rows(); ++i) {
    for (std::size_t a = 0; a < layer.w.rows(); ++a) {
      const double in = act_in(i, a);
      if (in == 0.0) continue;
      for (std::size_t b = 0; b < layer.w.cols(); ++b) {
        grad.w(a, b) += in * delta(i, b);
      }
    }
    for (std::size_t b = 0; b < layer.w.cols(); ++b) grad.b[b] += delta(i, b);
  }
  Matrix dinput(act_in.rows(), act_in.cols());
  for (std::size_t i = 0; i < act_in.rows(); ++i)
    for (std::size_t a = 0; a < layer.w.rows(); ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < layer.w.cols(); ++b) s += delta(i, b) * layer.w(a, b);
      dinput(i, a) = s;
    }
  return dinput;
}

void mask_relu(Matrix& delta, const Matrix& pre) {
  for (std::size_t i = 0; i < delta.data().size(); ++i) {
    if (pre.data()[i] <= 0.0) delta.data()[i] = 0.0;
  }
}

std::vector<DenseLayer> zero_layers(const std::vector<DenseLayer>& like) {
  std::vector<DenseLayer> out;
  out.reserve(like.size());
  for (const auto& l : like) {
    out.push_back({Matrix(l.w.rows(), l.w.cols()), std::vector<double>(l.b.size(), 0.0)});
  }
  return out;
}

void blocks_of(const char* prefix, std::vector<DenseLayer>& layers,
               std::vector<ParamBlock>& out) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string base = std::string(prefix) + "[" + std::to_string(l) + "]";
    out.push_back({base + ".w", layers[l].w.data().data(), layers[l].w.data().size()});
    out.push_back({base + ".b", layers[l].b.data(), layers[l].b.size()});
  }
}

}  // namespace

void ArchSpec::validate() const {
  for (std::size_t w : shared_widths)
    if (w == 0) throw std::invalid_argument("ArchSpec: zero-width shared layer");
  for (std::size_t w : head_widths)
    if (w == 0) throw std::invalid_argument("ArchSpec: zero-width head layer");
}

void TarnetGrads::set_zero() {
  for (auto* side : {&shared, &head0, &head1})
    for (auto& l : *side) {
      std::fill(l.w.data().begin(), l.w.data().end(), 0.0);
      std::fill(l.b.begin(), l.b.end(), 0.0);
    }
}

void TarnetGrads::axpy(double alpha, const TarnetGrads& other) {
  auto add = [alpha](std::vector<DenseLayer>& dst, const std::vector<DenseLayer>& src) {
    for (std::size_t l = 0; l < dst.size(); ++l) {
      for (std::size_t i = 0; i < dst[l].w.data().size(); ++i)
        dst[l].w.data()[i] += alpha * src[l].w.data()[i];
      for (std::size_t i = 0; i < dst[l].b.size(); ++i) dst[l].b[i] += alpha * src[l].b[i];
    }
  };
  add(shared, other.shared);
  add(head0, other.head0);
  add(head1, other.head1);
}

TarnetGrads zeros_like(const TarnetParams& params) {
  return {zero_layers(params.shared), zero_layers(params.head0), zero_layers(params.head1)};
}

std::vector<ParamBlock> param_blocks(TarnetParams& params) {
  std::vector<ParamBlock> out;
  blocks_of("shared", params.shared, out);
  blocks_of("head0", params.head0, out);
  blocks_of("head1", params.head1, out);
  return out;
}

std::vector<ParamBlock> param_blocks(TarnetGrads& grads) {
  std::vector<ParamBlock> out;
  blocks_of("shared", grads.shared, out);
  blocks_of("head0", grads.head0, out);
  blocks_of("head1", grads.head1, out);
  return out;
}

std::size_t param_count(const TarnetParams& params) {
  std::size_t n = 0;
  for (const auto* side : {&params.shared, &params.head0, &params.head1})
    for (const auto& l : *side) n += l.w.data().size() + l.b.size();
  return n;
}

TarnetParams init_params(std::size_t input_dim, const ArchSpec& arch, Rng& rng) {
  if (input_dim == 0) throw std::invalid_argument("init_params: input_dim must be positive");
  arch.validate();

  auto make_layers = [&rng](const std::vector<std::size_t>& dims) {
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const std::size_t fan_in = dims[l];
      const std::size_t fan_out = dims[l + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      DenseLayer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
      for (auto& w : layer.w.data()) w = rng.uniform(-limit, limit);
      layers.push_back(std::move(layer));
    }
    return layers;
  };

  TarnetParams p;
  p.input_dim = input_dim;
  p.arch = arch;
  p.init_seed = rng.seed();
  p.shared = make_layers(layer_dims(input_dim, arch.shared_widths, false));
  const std::size_t rep_dim =
      arch.shared_widths.empty() ? input_dim : arch.shared_widths.back();
  p.head0 = make_layers(layer_dims(rep_dim, arch.head_widths, true));
  p.head1 = make_layers(layer_dims(rep_dim, arch.head_widths, true));
  return p;
}

ForwardResult forward_both(const TarnetParams& params, const Matrix& x) {
  if (x.cols() != params.input_dim) {
    throw std::invalid_argument("forward: expected " + std::to_string(params.input_dim) +
                                " input columns, got " + std::to_string(x.cols()));
  }
  if (!x.all_finite()) throw std::invalid_argument("forward: non-finite input");

  ForwardResult res;
  res.cache.input = x;

  const Matrix* cur = &res.cache.input;
  for (const auto& layer : params.shared) {
    res.cache.shared_pre.push_back(affine(*cur, layer));
    res.cache.shared_act.push_back(relu(res.cache.shared_pre.back()));
    cur = &res.cache.shared_act.back();
  }
  const Matrix& rep = *cur;

  run_head(params.head0, rep, res.cache.head_pre[0], res.cache.head_act[0]);
  run_head(params.head1, rep, res.cache.head_pre[1], res.cache.head_act[1]);

  const Matrix& out0 = res.cache.head_act[0].back();
  const Matrix& out1 = res.cache.head_act[1].back();
  res.pred0.resize(x.rows());
  res.pred1.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    res.pred0[i] = out0(i, 0);
    res.pred1[i] = out1(i, 0);
  }
  return res;
}

std::vector<double> forward(const TarnetParams& params, const Matrix& x, int arm) {
  if (arm != 0 && arm != 1) throw std::invalid_argument("forward: arm must be 0 or 1");
  ForwardResult res = forward_both(params, x);
  return arm == 1 ? std::move(res.pred1) : std::move(res.pred0);
}

std::vector<double> predict_ite(const TarnetParams& params, const Matrix& x) {
  ForwardResult res = forward_both(params, x);
  std::vector<double> tau(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) tau[i] = res.pred1[i] - res.pred0[i];
  return tau;
}

void backward_both(const TarnetParams& params, const ForwardCache& cache,
                   std::span<const double> dpred0, std::span<const double> dpred1,
                   TarnetGrads& grads) {
  const std::size_t batch = cache.input.rows();
  if (dpred0.size() != batch || dpred1.size() != batch) {
    throw std::invalid_argument("backward: dpred size does not match cached batch");
  }
  const Matrix& rep = params.shared.empty() ? cache.input : cache.shared_act.back();

  Matrix drep(batch, rep.cols());
  const std::array<std::span<const double>, 2> dpreds{dpred0, dpred1};
  const std::array<const std::vector<DenseLayer>*, 2> heads{&params.head0, &params.head1};
  const std::array<std::vector<DenseLayer>*, 2> head_grads{&grads.head0, &grads.head1};

  for (int arm = 0; arm < 2; ++arm) {
    const auto& layers = *heads[arm];
    Matrix delta(batch, 1);
    for (std::size_t i = 0; i < batch; ++i) delta(i, 0) = dpreds[arm][i];
    for (std::size_t l = layers.size(); l-- > 0;) {
      const Matrix& act_in = (l == 0) ? rep : cache.head_act[arm][l - 1];
      Matrix dinput = backprop_layer(act_in, layers[l], delta, (*head_grads[arm])[l]);
      if (l > 0) {
        mask_relu(dinput, cache.head_pre[arm][l - 1]);
        delta = std::move(dinput);
      } else {
        for (std::size_t i = 0; i < batch; ++i)
          for (std::size_t j = 0; j < rep.cols(); ++j) drep(i, j) += dinput(i, j);
      }
    }
  }

  Matrix delta = std::move(drep);
  for (std::size_t l = params.shared.size(); l-- > 0;) {
    mask_relu(delta, cache.shared_pre[l]);
    const Matrix& act_in = (l == 0) ? cache.input : cache.shared_act[l - 1];
    delta = backprop_layer(act_in, params.shared[l], delta, grads.shared[l]);
  }
}

void save_checkpoint(const TarnetParams& params, const std::string& path) {
  nlohmann::json j;
  j["magic"] = kCheckpointMagic;
  j["version"] = kCheckpointVersion;
  j["input_dim"] = params.input_dim;
  j["init_seed"] = params.init_seed;
  j["arch"] = {{"shared_widths", params.arch.shared_widths},
               {"head_widths", params.arch.head_widths}};
  auto dump_side = [](const std::vector<DenseLayer>& layers) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& l : layers) {
      out.push_back({{"rows", l.w.rows()}, {"cols", l.w.cols()}, {"w", l.w.data()}, {"b", l.b}});
    }
    return out;
  };
  j["shared"] = dump_side(params.shared);
  j["head0"] = dump_side(params.head0);
  j["head1"] = dump_side(params.head1);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
  out << j.dump(2) << "\n";
}

TarnetParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  if (j.value("magic", "") != kCheckpointMagic) {
    throw std::runtime_error("load_checkpoint: '" + path + "' is not a cfprop checkpoint");
  }
  if (j.value("version", -1) != kCheckpointVersion) {
    throw std::runtime_error("load_checkpoint: unsupported checkpoint version");
  }
  TarnetParams p;
  p.input_dim = j.at("input_dim").get<std::size_t>();
  p.init_seed = j.at("init_seed").get<std::uint64_t>();
  p.arch.shared_widths = j.at("arch").at("shared_widths").get<std::vector<std::size_t>>();
  p.arch.head_widths = j.at("arch").at("head_widths").get<std::vector<std::size_t>>();
  auto load_side = [](const nlohmann::json& arr) {
    std::vector<DenseLayer> layers;
    for (const auto& lj : arr) {
      layers.push_back({Matrix(lj.at("rows").get<std::size_t>(), lj.at("cols").get<std::size_t>(),
                               lj.at("w").get<std::vector<double>>()),
                        lj.at("b").get<std::vector<double>>()});
    }
    return layers;
  };
  p.shared = load_side(j.at("shared"));
  p.head0 = load_side(j.at("head0"));
  p.head1 = load_side(j.at("head1"));
  return p;
}

}  // namespace cfprop
