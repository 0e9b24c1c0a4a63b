#pragma once

#include <string>
#include <vector>

#include "tensorstick/gibbs.hpp"

namespace tensorstick {

// Joint predictive draw for one covariate profile under one posterior draw.
struct PredictiveSample {
  Eigen::VectorXd p_tilde;  // latent probability per type
  Eigen::VectorXi y_tilde;  // simulated outcome per type
  int draw_index = 0;
};

// Generative-path simulation: fresh individual effects from N(0, sigma2_r),
// sticks from the snapshot's intercepts/coefficients, atom pick, binomial.
// x_tilde must already be standardized with the training statistics.
PredictiveSample predictive_draw(Rng& rng, const Snapshot& snap,
                                 const Eigen::VectorXd& x_tilde,
                                 const Eigen::VectorXi& n_tilde,
                                 int draw_index = 0);

// log[(1/T) sum_t prod_j pmf(Y_j; n_j, p(t,j))] via log-sum-exp.
double lppl_for_subject(const Eigen::MatrixXd& p_draws, const Eigen::VectorXi& Y_i,
                        const Eigen::VectorXi& n_i);

struct CvOptions {
  bool randomized_pit = false;  // spread predictive ties uniformly
  int jobs = 1;
};

struct CvReport {
  int K = 0;
  bool randomized_pit = false;
  std::vector<int> fold_of_subject;  // size I
  Eigen::VectorXd subject_lppl;      // size I
  double lppl_total = 0;
  Eigen::MatrixXd phi;               // I x J predictive quantiles
};

// Seeded permutation split into K near-equal folds (sizes differ by <= 1).
std::vector<std::vector<int>> make_folds(std::uint64_t seed, int I, int K);

// Refits the model on each training fold (covariates re-standardized with
// training statistics only), draws one predictive sample per retained draw
// for every held-out subject, and accumulates LPPL and per-cell quantiles
// phi_ij = (1/T) sum_t 1{Y_ij < Y_ij^(t)}. K = I gives exact leave-one-out.
CvReport cross_validate(std::uint64_t seed, const ModelConfig& model,
                        const ChainConfig& chain, const Dataset& data, int K,
                        const CvOptions& options = {});

struct EcdfResult {
  std::vector<double> sorted;  // ascending phi values
  double ks = 0;               // sup-norm distance from the uniform CDF
};

EcdfResult quantile_ecdf(std::vector<double> phi);

// Predictive summary for one covariate profile under a whole draw store:
// per-type outcome histogram and latent-probability quantiles.
struct ProfilePrediction {
  std::vector<Eigen::VectorXd> y_hist;  // per type, length n_j + 1, sums to 1
  Eigen::MatrixXd p_quantiles;          // J x 3: 0.025, 0.5, 0.975
};

ProfilePrediction predict_profile(Rng& rng, const DrawStore& store,
                                  const Eigen::VectorXd& x_raw,
                                  const Eigen::VectorXi& n_tilde);

void write_cv_report_json(const CvReport& report, const Dataset& data,
                          std::uint64_t seed, std::uint64_t config_hash,
                          const std::string& path);
void write_quantiles_csv(const CvReport& report, const Dataset& data,
                         const std::string& path);

}  // namespace tensorstick
