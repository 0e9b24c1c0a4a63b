#pragma once

#include <string>
#include <utility>

#include <Eigen/Core>

#include "tensorstick/dataset.hpp"
#include "tensorstick/sampling.hpp"
#include "tensorstick/tensor.hpp"

namespace tensorstick {

enum class CoefStructure { none, shared_types, full, low_rank };
enum class ErrorStructure { none, low_rank };

std::string to_string(CoefStructure s);
std::string to_string(ErrorStructure s);
CoefStructure coef_structure_from_string(const std::string& s);
ErrorStructure error_structure_from_string(const std::string& s);

struct ModelConfig {
  int H = 25;                                     // truncation level
  CoefStructure coef = CoefStructure::low_rank;
  int rank = 1;                                   // R when coef is low_rank
  ErrorStructure error = ErrorStructure::none;
  int error_rank = 1;                             // R_e when error is low_rank
  double beta_a = 1.0, beta_b = 1.0;              // base distribution Beta(a,b)
  double ig_shape = 0.1, ig_rate = 0.1;           // sigma^2_r hyperprior

  void validate() const;
  std::uint64_t hash() const;
};

// Covariate coefficient block; which member is live depends on `kind`.
struct CoefBlock {
  CoefStructure kind = CoefStructure::none;
  CpFactors cp;             // low_rank: B1 D x R, B2 J x R, B3 H x R
  Array3 dense;             // full: D x J x H
  Eigen::MatrixXd shared;   // shared_types: D x H

  bool present() const { return kind != CoefStructure::none; }
};

struct ErrorBlock {
  ErrorStructure kind = ErrorStructure::none;
  CpFactors cp;             // E1 I x Re, E2 J x Re, E3 H x Re

  bool present() const { return kind != ErrorStructure::none; }
};

// One full Gibbs state. Component indices (entries of C) are 0-based.
// Zstar entries with h > C(i,j) are placeholders: written once at
// initialization and never read afterwards.
struct ParamState {
  Eigen::VectorXd theta;   // H atoms in (0,1)
  Eigen::MatrixXd Zjh;     // J x H intercepts
  double alpha = 0.0;
  CoefBlock coef;
  ErrorBlock err;
  Eigen::VectorXd sigma2;  // R_e scales, empty when no error block
  Eigen::MatrixXi C;       // I x J allocations in [0, H)
  Array3 Zstar;            // I x J x H latent probit variables

  int H() const { return static_cast<int>(theta.size()); }
};

struct StickWeights {
  Array3 V;   // sticks in (0,1], V[., ., H-1] = 1
  Array3 pi;  // weights, sum_h pi[i,j,h] = 1
};

// X' * B contribution to the linear predictor, as an I x J x H array;
// all-zero when the block is absent.
Array3 coef_term(const CoefBlock& coef, const Eigen::MatrixXd& X, int J, int H);

// Composed individual-effect array E (I x J x H); all-zero when absent.
Array3 error_term(const ErrorBlock& err, int I, int J, int H);

// Z_jh + X B + E, the probit-scale predictor for every stick.
Array3 linear_predictor(const ParamState& state, const Eigen::MatrixXd& X);

// V[i,j,h] = Phi(predictor), last stick forced to 1; pi by stick-breaking.
StickWeights compute_sticks(const ParamState& state, const Eigen::MatrixXd& X);

// log C(n,y) + y log p + (n-y) log(1-p); boundary p in {0,1} exact.
double binomial_logpmf(int y, int n, double p);

double loglik(const ParamState& state, const Dataset& data);

// Top-down draw of every parameter from its prior, then data from the
// likelihood. X must already be standardized; n gives the trial counts.
std::pair<ParamState, Dataset> prior_generative_draw(Rng& rng,
                                                     const ModelConfig& config,
                                                     const Eigen::MatrixXd& X,
                                                     const Eigen::MatrixXi& n);

}  // namespace tensorstick
