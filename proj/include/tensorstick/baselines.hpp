#pragma once

#include <string>
#include <vector>

#include "tensorstick/dataset.hpp"
#include "tensorstick/gibbs.hpp"
#include "tensorstick/predictive.hpp"

namespace tensorstick {

// Logistic comparators:
//   no_error        logit(p_ij) = x_i b_j
//   separate        logit(p_ij) = x_i b_j + eps_ij
//   shared_beta     logit(p_ij) = x_i b   + eps_ij
//   shared_beta_eps logit(p_ij) = x_i b   + eps_i
enum class LogisticVariant { no_error, separate, shared_beta, shared_beta_eps };

std::string to_string(LogisticVariant v);
LogisticVariant logistic_variant_from_string(const std::string& s);

struct LogisticConfig {
  LogisticVariant variant = LogisticVariant::separate;
  double prior_var_beta = 100.0;
  double ig_shape = 0.1, ig_rate = 0.1;   // sigma^2 prior
  double target_accept = 0.44;            // per scalar block
  int adapt_window = 50;                  // divergence-check window (sweeps)
  double init_step = 0.5;
  bool adapt = true;                      // Robbins-Monro during burn-in only

  void validate() const;
  std::uint64_t hash() const;
};

struct LogisticDraws {
  LogisticVariant variant = LogisticVariant::separate;
  int J = 0, D = 0;
  std::vector<Eigen::MatrixXd> beta;  // per draw: (J or 1) x D
  std::vector<Eigen::MatrixXd> eps;   // per draw: I x (J or 1); empty rows for no_error
  std::vector<double> sigma2;         // per draw; empty for no_error
  Eigen::MatrixXd beta_accept;        // acceptance rate per coefficient scalar
  double eps_accept = 0;              // pooled acceptance rate for errors
  Eigen::MatrixXd beta_step;          // step sizes after adaptation froze
};

double logit(double p);
double inv_logit(double x);  // clamped into (0,1); stable for |x| up to ~745
double log1pexp(double x);

// One-sweep Metropolis-within-Gibbs driver. Holds a reference to the
// dataset; refresh_cache() must be called if the outcomes are mutated in
// place (successive-conditional correctness checks do this).
class LogisticSampler {
 public:
  LogisticSampler(const LogisticConfig& config, const Dataset& data);

  void sweep(Rng& rng, int iteration, int burn_in);
  void refresh_cache();

  const Eigen::MatrixXd& beta() const { return beta_; }
  const Eigen::MatrixXd& eta() const { return eta_; }
  double sigma2() const { return sigma2_; }
  int beta_rows() const { return n_beta_rows_; }
  int eps_cols() const { return n_eps_cols_; }
  Eigen::MatrixXd eps_block() const { return eps_.leftCols(n_eps_cols_); }
  const Eigen::MatrixXd& beta_logstep() const { return beta_logstep_; }
  Eigen::MatrixXd beta_accept_rate() const;
  double eps_accept_rate() const;

 private:
  void update_beta_scalar(Rng& rng, int b, int d, double gamma, bool adapting);
  void update_eps_scalar(Rng& rng, int i, int c, double gamma, bool adapting);

  const LogisticConfig& config_;
  const Dataset& data_;
  int I_, J_, D_;
  int n_beta_rows_, n_eps_cols_;
  Eigen::MatrixXd beta_, eps_, eta_, cell_ll_;
  double sigma2_ = 1.0;
  Eigen::MatrixXd beta_logstep_, eps_logstep_;
  Eigen::MatrixXd beta_acc_, beta_try_;
  double eps_acc_ = 0, eps_try_ = 0;
  long window_accepts_ = 0, window_proposals_ = 0;
};

// Metropolis-within-Gibbs with scalar random-walk proposals and conjugate
// inverse-gamma updates for sigma^2. Step sizes adapt toward target_accept
// during burn-in and are frozen afterwards.
LogisticDraws fit_logistic(const LogisticConfig& config, const Dataset& data,
                           const ChainConfig& chain);

// LPPL of a held-out dataset under fitted draws; new-subject errors are
// drawn fresh from N(0, sigma^2(t)) per retained draw. Also fills phi
// quantiles when report pointers are given.
double logistic_predictive_lppl(Rng& rng, const LogisticDraws& draws,
                                const Dataset& test,
                                Eigen::VectorXd* subject_lppl = nullptr,
                                Eigen::MatrixXd* phi = nullptr,
                                bool randomized_pit = false);

// Same fold machinery as the stick-breaking cross_validate (identical fold
// assignments for a given seed).
CvReport logistic_cross_validate(std::uint64_t seed, const LogisticConfig& config,
                                 const ChainConfig& chain, const Dataset& data,
                                 int K, const CvOptions& options = {});

void save_logistic_draws(const LogisticDraws& draws, const LogisticConfig& config,
                         const ChainConfig& chain, const Dataset& data,
                         const std::string& dir);

}  // namespace tensorstick
