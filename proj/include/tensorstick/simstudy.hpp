#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tensorstick/baselines.hpp"
#include "tensorstick/model.hpp"

namespace tensorstick {

enum class SimKind { logistic, lowrank_psb, fullrank_psb };

std::string to_string(SimKind k);
SimKind sim_kind_from_string(const std::string& s);

struct SimDesign {
  SimKind kind = SimKind::lowrank_psb;
  int I = 290, J = 4, D = 6;
  int H = 25;                                // PSB generative truncation
  std::vector<int> n_per_type = {48, 48, 48, 24};
  std::uint64_t seed = 1;

  void validate() const;
  Eigen::MatrixXi trial_counts() const;      // I x J
};

// Generator latents; which fields are populated depends on the design.
struct SimTruth {
  Eigen::MatrixXd p;     // I x J latent probabilities
  Eigen::VectorXd beta;  // logistic design coefficients
  Eigen::VectorXd eps;   // logistic subject errors
  ParamState state;      // PSB designs
};

// First three columns N(0,1), next three Bernoulli(0.5) indicators, any
// further columns N(0,1); all standardized to mean 0, variance 1. Constant
// indicator columns are regenerated.
Eigen::MatrixXd gen_covariates(Rng& rng, int I, int D);

std::pair<Dataset, SimTruth> gen_logistic_sim(Rng& rng, const SimDesign& design);
std::pair<Dataset, SimTruth> gen_lowrank_psb_sim(Rng& rng, const SimDesign& design);
std::pair<Dataset, SimTruth> gen_fullrank_psb_sim(Rng& rng, const SimDesign& design);

// Dispatch on design.kind with a fresh Rng(design.seed).
std::pair<Dataset, SimTruth> generate(const SimDesign& design);

// LPPL comparison grid: the 4 x 3 stick-breaking block
// {no B, rank-1, rank-2, full} x {no E, rank-1 E, rank-2 E} plus the three
// logistic variants. NaN marks a failed cell.
struct GridResult {
  std::vector<std::string> psb_rows{"no_B", "rank1_B", "rank2_B", "full_B"};
  std::vector<std::string> psb_cols{"no_E", "rank1_E", "rank2_E"};
  Eigen::MatrixXd psb;  // 4 x 3 mean LPPL
  std::vector<std::string> logistic_labels{"separate", "shared_beta",
                                           "shared_beta_eps"};
  Eigen::VectorXd logistic;  // 3 mean LPPL
  int replications = 1;

  double psb_cell(const std::string& row, const std::string& col) const;
  double logistic_cell(const std::string& label) const;
};

// Each replication generates a dataset (seed + replication index) and
// cross-validates every cell on the same folds; cells run in parallel under
// deterministic per-cell seeds, and a failed cell does not stop the grid.
GridResult run_grid(std::uint64_t seed, const SimDesign& design,
                    const ModelConfig& base, const ChainConfig& chain, int K,
                    int jobs = 1, int replications = 1);

std::string render_grid_text(const GridResult& grid);
void write_grid_csv(const GridResult& grid, const std::string& path);

// Desk-scale preset sized for the simulation-pattern checks: I = 150,
// 1500/750 iterations, K = 5.
struct DeskPreset {
  SimDesign design;
  ModelConfig model;
  ChainConfig chain;
  int K = 5;
};
DeskPreset desk_preset(SimKind kind, std::uint64_t seed);

}  // namespace tensorstick
