#pragma once

#include <random>
#include <vector>

#include "metacde/tensor.hpp"

namespace metacde {

// Noise distribution the classifier discriminates against: an isotropic
// Gaussian KDE over the pooled task responses (context and target y pooled
// together). Samples are "fakes"; log_pdf supplies the density correction in
// the classifier logit.
struct FakeSampler {
  int dim = 1;
  double bandwidth = 0.0;
  std::vector<double> centers;  // [m x dim]

  int count() const { return static_cast<int>(centers.size()) / dim; }
  double log_pdf(const double* y) const;
  double log_pdf1(double y) const { return log_pdf(&y); }
  void sample(std::mt19937_64& rng, double* out) const;
};

// bandwidth_spec > 0 uses that bandwidth; <= 0 applies Silverman's rule to
// the pooled sample.
FakeSampler fake_sampler_fit(const std::vector<double>& pooled, int dim, double bandwidth_spec);

// Silverman's rule. 1-D: 0.9 min(sd, iqr/1.34) m^(-1/5). d-D: the scaled
// mean-per-dimension-std form (4/(d+2))^(1/(d+4)) m^(-1/(d+4)) mean_sd.
// Zero-spread samples make the bandwidth degenerate -> DomainError.
double silverman_bandwidth(const std::vector<double>& values, int dim);

// Classifier logit for a (x, y) pair: score_plus_bias - log(kappa) - log_fake.
double nce_classifier_logit(double score_plus_bias, double log_fake_density, int kappa);

// Probability the pair is real. Computed as 1/(1 + kappa*exp(-(s+b-log_pf)))
// so that score_plus_bias == log_fake_density gives exactly 1/(1+kappa): the
// fixed point where the model density equals the fake density.
double nce_real_probability(double score_plus_bias, double log_fake_density, int kappa);

// Logistic loss over one task's pairs from classifier logits:
// sum softplus(-true) + sum softplus(fake). true_logits {t}, fake_logits
// [t x kappa] (row j holds the fakes drawn for target j).
Tensor nce_loss(const Tensor& true_logits, const Tensor& fake_logits);

}  // namespace metacde
