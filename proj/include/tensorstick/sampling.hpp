#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "tensorstick/common.hpp"

namespace tensorstick {

double std_normal_cdf(double x);

// Inverse of std_normal_cdf on (0,1). Acklam's rational approximation plus
// one Halley refinement against the erfc-based CDF; relative accuracy holds
// deep into both tails.
double std_normal_quantile(double p);

enum class TruncSide { positive, negative };

// Seeded pseudo-random stream. All distribution draws are implemented on top
// of the raw mt19937_64 output, so identical seeds give bitwise-identical
// sequences on any platform. Single-owner: use derive() to hand independent
// substreams to parallel work.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent substream keyed by a salt; deterministic given (seed, salt).
  Rng derive(std::uint64_t salt) const { return Rng(mix_seed(seed_, salt)); }

  // Uniform on the open interval (0,1).
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
  }

  double std_normal();
  double normal(double mean, double var);

  // Gamma(shape, scale); Marsaglia-Tsang squeeze, boosted for shape < 1.
  double gamma(double shape, double scale);

  double sample_beta(double a, double b);

  // Density proportional to x^(-shape-1) exp(-rate/x).
  double sample_inverse_gamma(double shape, double rate);

  // Exact count draw as a sum of Bernoulli trials; O(n).
  int sample_binomial(int n, double p);

  // Draw from N(mean, 1) restricted to the strictly positive or strictly
  // negative half-line. Inversion while the truncation point sits within 5
  // sd of the mean; Robert's exponential-proposal rejection in the far tail,
  // where inversion runs out of quantile resolution.
  double sample_trunc_std_normal(double mean, TruncSide side);

  // Index h with probability exp(logw[h]) / sum_l exp(logw[l]).
  int sample_categorical_log(const Eigen::VectorXd& logw);

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

// Conditional mean/covariance of a Bayesian linear model with unit noise
// variance and a diagonal prior precision.
struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  // mean + L xi with covariance = L L^T.
  Eigen::VectorXd sample(Rng& rng) const;
};

// covariance = (W^T W + diag(prior_prec))^-1, mean = covariance * W^T z.
// W may have zero rows, in which case the prior comes back.
GaussianPosterior gaussian_linear_update(const Eigen::MatrixXd& W,
                                         const Eigen::VectorXd& z,
                                         const Eigen::VectorXd& prior_prec);

}  // namespace tensorstick
