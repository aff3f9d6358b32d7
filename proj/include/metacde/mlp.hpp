#pragma once

#include <random>
#include <vector>

#include "metacde/tensor.hpp"

namespace metacde {

// Fully connected net: affine layers with tanh on every layer except the
// last. Weights are [out x in]; batches put points in rows, so the forward
// map is x -> tanh(x W^T + b) layer by layer.
struct Mlp {
  std::vector<int> dims;  // {in, hidden..., out}
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
};

// Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.
// Draw order is fixed (layers in order, weights row-major, then nothing for
// biases), so a seed pins the init bit-for-bit.
Mlp mlp_init(const std::vector<int>& dims, std::mt19937_64& rng);

// Parameter tensors in a stable order: w0, b0, w1, b1, ...
std::vector<Tensor*> mlp_params(Mlp& net);

// Tape-bound view of the same parameter buffers.
struct MlpRef {
  std::vector<Tensor> weights, biases;
};
MlpRef mlp_bind(const Mlp& net, Tape& tape);

// x [n x in] -> [n x out]; taped when net/x are taped, eager otherwise.
Tensor mlp_forward(const MlpRef& net, const Tensor& x);
Tensor mlp_forward(const Mlp& net, const Tensor& x);  // always eager

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are owned here and keyed by
// position, so the params vector must not change between steps.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamConfig cfg = {});
  void step(const std::vector<const std::vector<double>*>& grads);
  long long steps_taken() const { return t_; }

 private:
  std::vector<Tensor*> params_;
  AdamConfig cfg_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace metacde
