#pragma once

#include <string>
#include <vector>

#include "tensorstick/model.hpp"

namespace tensorstick {

struct ChainConfig {
  int iterations = 2000;
  int burn_in = 1000;
  int thin = 1;
  std::uint64_t seed = 1;
  bool store_latents = false;

  void validate() const;
  std::uint64_t hash() const;
  int retained() const { return (iterations - burn_in) / thin; }
};

// One retained Gibbs state plus its data log-likelihood.
struct Snapshot {
  Eigen::VectorXd theta;
  Eigen::MatrixXd Zjh;
  double alpha = 0.0;
  CoefBlock coef;
  ErrorBlock err;
  Eigen::VectorXd sigma2;
  Eigen::MatrixXi C;
  Array3 Zstar;  // populated only when store_latents
  double loglik = 0.0;
};

struct DrawStoreMeta {
  ModelConfig model;
  ChainConfig chain;
  int I = 0, J = 0, D = 0;
  std::uint64_t dataset_hash = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::string> covariate_names, type_names;
  Eigen::VectorXd x_mean, x_sd;  // training standardization stats
};

// Persisted chain output: versioned directory of a metadata JSON plus one
// CSV per parameter block, one row per retained draw. Layout documented in
// the README.
struct DrawStore {
  DrawStoreMeta meta;
  std::vector<Snapshot> draws;

  void save(const std::string& dir) const;
  static DrawStore load(const std::string& dir);
};

// --- residual targets over active cells (h <= C(i,j); other entries are
// computed too but must never be read) ---

// z_B = Zstar - Zjh - E
Array3 coef_residual(const ParamState& state);
// z_E = Zstar - Zjh - X B
Array3 err_residual(const ParamState& state, const Eigen::MatrixXd& X);
// z_Z = Zstar - X B - E
Array3 intercept_residual(const ParamState& state, const Eigen::MatrixXd& X);

// --- full conditionals for the factor blocks (unit noise variance).
// B1 is vectorized d-major: unknown k = d*R + r. ---

GaussianPosterior coef_b1_conditional(const ParamState& state,
                                      const Eigen::MatrixXd& X, const Array3& zB);
GaussianPosterior coef_b2_row_conditional(const ParamState& state,
                                          const Eigen::MatrixXd& XB1,
                                          const Array3& zB, int j);
GaussianPosterior coef_b3_row_conditional(const ParamState& state,
                                          const Eigen::MatrixXd& XB1,
                                          const Array3& zB, int h);
GaussianPosterior coef_full_conditional(const ParamState& state,
                                        const Eigen::MatrixXd& X, const Array3& zB,
                                        int j, int h);
GaussianPosterior coef_shared_conditional(const ParamState& state,
                                          const Eigen::MatrixXd& X,
                                          const Array3& zB, int h);
GaussianPosterior err_e1_row_conditional(const ParamState& state,
                                         const Eigen::MatrixXd& E23,
                                         const Array3& zE, int i);
GaussianPosterior err_e2_row_conditional(const ParamState& state, const Array3& zE,
                                         int j);
GaussianPosterior err_e3_row_conditional(const ParamState& state, const Array3& zE,
                                         int h);

// --- Gibbs steps ---

void update_allocations(Rng& rng, ParamState& state, const Dataset& data,
                        const StickWeights& sticks);
void update_atoms(Rng& rng, ParamState& state, const Dataset& data,
                  const ModelConfig& config);
void update_latent_probits(Rng& rng, ParamState& state, const Eigen::MatrixXd& X);
void update_coefficients(Rng& rng, ParamState& state, const Eigen::MatrixXd& X);
void update_individual_effects(Rng& rng, ParamState& state,
                               const Eigen::MatrixXd& X);
void update_scales(Rng& rng, ParamState& state, const ModelConfig& config);
void update_intercepts(Rng& rng, ParamState& state, const Eigen::MatrixXd& X);
void update_concentration(Rng& rng, ParamState& state);

// Overdispersed-but-stable start: sorted prior atoms, zero intercepts,
// small factor entries, allocations at the prior-times-likelihood argmax.
ParamState initialize_state(Rng& rng, const ModelConfig& config,
                            const Dataset& data);

// One full sweep (steps 1-8 in order, then stick recomputation). `sticks`
// must be current for `state` on entry; the recomputed weights are returned.
// `iteration` only labels numeric-failure diagnostics.
StickWeights gibbs_sweep(Rng& rng, ParamState& state, const Dataset& data,
                         const ModelConfig& config, const StickWeights& sticks,
                         int iteration = -1);

DrawStore run_chain(const ChainConfig& chain, const ModelConfig& model,
                    const Dataset& data);

Snapshot snapshot_of(const ParamState& state, const Dataset& data,
                     bool store_latents);

}  // namespace tensorstick
