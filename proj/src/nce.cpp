#include "metacde/nce.hpp"

#include <algorithm>
#include <cmath>

#include "metacde/errors.hpp"
#include "metacde/kernels.hpp"

namespace metacde {
namespace {

constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)

double quantile_sorted(const std::vector<double>& s, double q) {
  // linear interpolation between order statistics
  const double pos = q * (s.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] * (1.0 - frac) + s[hi] * frac;
}

}  // namespace

double silverman_bandwidth(const std::vector<double>& values, int dim) {
  if (dim < 1) throw DomainError("silverman_bandwidth: dim must be >= 1");
  if (values.empty() || values.size() % dim != 0)
    throw DomainError("silverman_bandwidth: sample size not a multiple of dim");
  const int m = static_cast<int>(values.size()) / dim;
  if (m < 2) throw DomainError("silverman_bandwidth: need at least 2 points");

  auto dim_sd = [&](int d) {
    double mean = 0.0;
    for (int i = 0; i < m; ++i) mean += values[static_cast<size_t>(i) * dim + d];
    mean /= m;
    double ss = 0.0;
    for (int i = 0; i < m; ++i) {
      const double c = values[static_cast<size_t>(i) * dim + d] - mean;
      ss += c * c;
    }
    return std::sqrt(ss / (m - 1));
  };

  double h;
  if (dim == 1) {
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const double sd = dim_sd(0);
    double spread = std::min(sd, iqr / 1.34);
    if (spread == 0.0) spread = std::max(sd, iqr / 1.34);  // iqr can be 0 on heavy ties
    h = 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
  } else {
    double mean_sd = 0.0;
    for (int d = 0; d < dim; ++d) mean_sd += dim_sd(d);
    mean_sd /= dim;
    h = std::pow(4.0 / (dim + 2), 1.0 / (dim + 4)) * std::pow(static_cast<double>(m), -1.0 / (dim + 4)) *
        mean_sd;
  }
  if (!(h > 0.0)) throw DomainError("silverman_bandwidth: sample has zero spread");
  return h;
}

FakeSampler fake_sampler_fit(const std::vector<double>& pooled, int dim, double bandwidth_spec) {
  if (dim < 1) throw DomainError("fake_sampler_fit: dim must be >= 1");
  if (pooled.empty() || pooled.size() % dim != 0)
    throw DomainError("fake_sampler_fit: pooled sample size not a multiple of dim");
  FakeSampler fs;
  fs.dim = dim;
  fs.centers = pooled;
  fs.bandwidth = bandwidth_spec > 0.0 ? bandwidth_spec : silverman_bandwidth(pooled, dim);
  return fs;
}

double FakeSampler::log_pdf(const double* y) const {
  const int m = count();
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  std::vector<double> ex(m);
  for (int i = 0; i < m; ++i) {
    double d2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double c = y[d] - centers[static_cast<size_t>(i) * dim + d];
      d2 += c * c;
    }
    ex[i] = -d2 * inv2h2;
  }
  const auto& kt = kernels::active();
  const double shift = kt.max(m, ex.data());
  const double lse = shift + std::log(kt.sum_exp_shifted(m, ex.data(), shift));
  return lse - std::log(static_cast<double>(m)) - dim * (std::log(bandwidth) + 0.5 * kLogTwoPi);
}

void FakeSampler::sample(std::mt19937_64& rng, double* out) const {
  std::uniform_int_distribution<int> pick(0, count() - 1);
  std::normal_distribution<double> noise(0.0, bandwidth);
  const int i = pick(rng);
  for (int d = 0; d < dim; ++d) out[d] = centers[static_cast<size_t>(i) * dim + d] + noise(rng);
}

double nce_classifier_logit(double score_plus_bias, double log_fake_density, int kappa) {
  if (kappa < 1) throw DomainError("nce_classifier_logit: kappa must be >= 1");
  return score_plus_bias - std::log(static_cast<double>(kappa)) - log_fake_density;
}

double nce_real_probability(double score_plus_bias, double log_fake_density, int kappa) {
  if (kappa < 1) throw DomainError("nce_real_probability: kappa must be >= 1");
  const double t = score_plus_bias - log_fake_density;
  return 1.0 / (1.0 + static_cast<double>(kappa) * std::exp(-t));
}

Tensor nce_loss(const Tensor& true_logits, const Tensor& fake_logits) {
  if (true_logits.rank() != 1)
    throw DimensionError("nce_loss: true logits must be rank-1, got rank " +
                         std::to_string(true_logits.rank()));
  if (fake_logits.rank() != 2 || fake_logits.rows() != true_logits.shape[0])
    throw DimensionError("nce_loss: fake logits must be [" + std::to_string(true_logits.shape[0]) +
                         " x kappa]");
  return add(sum(softplus(neg(true_logits))), sum(softplus(fake_logits)));
}

}  // namespace metacde
