#include "metacde/mlp.hpp"

#include <cmath>

#include "metacde/errors.hpp"

namespace metacde {

Mlp mlp_init(const std::vector<int>& dims, std::mt19937_64& rng) {
  if (dims.size() < 2) throw DomainError("mlp_init: need at least input and output dims");
  for (int d : dims)
    if (d < 1) throw DomainError("mlp_init: layer dims must be positive");
  Mlp net;
  net.dims = dims;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor w = tensor_zeros({out, in});
    for (int i = 0; i < out * in; ++i) (*w.data)[i] = u(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(tensor_zeros({out}));
  }
  return net;
}

std::vector<Tensor*> mlp_params(Mlp& net) {
  std::vector<Tensor*> ps;
  for (size_t l = 0; l < net.weights.size(); ++l) {
    ps.push_back(&net.weights[l]);
    ps.push_back(&net.biases[l]);
  }
  return ps;
}

MlpRef mlp_bind(const Mlp& net, Tape& tape) {
  MlpRef ref;
  for (size_t l = 0; l < net.weights.size(); ++l) {
    ref.weights.push_back(tape.param(net.weights[l]));
    ref.biases.push_back(tape.param(net.biases[l]));
  }
  return ref;
}

namespace {
template <class Net>
Tensor forward_impl(const Net& net, const Tensor& x) {
  Tensor h = x;
  const size_t layers = net.weights.size();
  for (size_t l = 0; l < layers; ++l) {
    h = add_rowvec(matmul(h, net.weights[l], false, true), net.biases[l]);
    if (l + 1 < layers) h = tanh(h);
  }
  return h;
}
}  // namespace

Tensor mlp_forward(const MlpRef& net, const Tensor& x) { return forward_impl(net, x); }
Tensor mlp_forward(const Mlp& net, const Tensor& x) { return forward_impl(net, x); }

Adam::Adam(std::vector<Tensor*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Tensor* p : params_) {
    m_.emplace_back(p->numel(), 0.0);
    v_.emplace_back(p->numel(), 0.0);
  }
}

void Adam::step(const std::vector<const std::vector<double>*>& grads) {
  if (grads.size() != params_.size())
    throw DimensionError("adam: got " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params_.size()) + " parameters");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    const std::vector<double>& g = *grads[i];
    if (static_cast<int>(g.size()) != params_[i]->numel())
      throw DimensionError("adam: gradient size mismatch at parameter " + std::to_string(i));
    double* th = params_[i]->ptr();
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (size_t j = 0; j < g.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      th[j] -= cfg_.learning_rate * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg_.eps);
    }
  }
}

}  // namespace metacde
