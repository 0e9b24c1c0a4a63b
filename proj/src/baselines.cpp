#include "tensorstick/baselines.hpp"

#include <cfloat>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace tensorstick {

std::string to_string(LogisticVariant v) {
  switch (v) {
    case LogisticVariant::no_error: return "no_error";
    case LogisticVariant::separate: return "separate";
    case LogisticVariant::shared_beta: return "shared_beta";
    case LogisticVariant::shared_beta_eps: return "shared_beta_eps";
  }
  return "?";
}

LogisticVariant logistic_variant_from_string(const std::string& s) {
  if (s == "no_error") return LogisticVariant::no_error;
  if (s == "separate") return LogisticVariant::separate;
  if (s == "shared_beta") return LogisticVariant::shared_beta;
  if (s == "shared_beta_eps") return LogisticVariant::shared_beta_eps;
  throw input_error("unknown logistic variant '" + s + "'");
}

void LogisticConfig::validate() const {
  if (!(prior_var_beta > 0))
    throw input_error("LogisticConfig: prior variance must be positive");
  if (!(ig_shape > 0) || !(ig_rate > 0))
    throw input_error("LogisticConfig: inverse-gamma hyperparameters must be positive");
  if (!(target_accept > 0 && target_accept < 1))
    throw input_error("LogisticConfig: target acceptance must lie in (0,1)");
  if (adapt_window < 1) throw input_error("LogisticConfig: adapt_window must be >= 1");
  if (!(init_step > 0)) throw input_error("LogisticConfig: init_step must be positive");
}

std::uint64_t LogisticConfig::hash() const {
  std::string s = "variant=" + to_string(variant) + ";pv=" + fmt_g17(prior_var_beta) +
                  ";igs=" + fmt_g17(ig_shape) + ";igr=" + fmt_g17(ig_rate) +
                  ";ta=" + fmt_g17(target_accept) + ";aw=" + std::to_string(adapt_window) +
                  ";is=" + fmt_g17(init_step) + ";ad=" + std::to_string(adapt ? 1 : 0);
  return fnv1a64(s);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw input_error("logit: p must lie in (0,1)");
  return std::log(p / (1.0 - p));
}

double inv_logit(double x) {
  double p;
  if (x >= 0) {
    double e = std::exp(-x);
    p = 1.0 / (1.0 + e);
  } else {
    double e = std::exp(x);
    p = e / (1.0 + e);
  }
  // keep the likelihood path off the exact 0/1 boundary
  if (p < DBL_MIN) p = DBL_MIN;
  double top = std::nextafter(1.0, 0.0);
  if (p > top) p = top;
  return p;
}

double log1pexp(double x) {
  if (x > 33.0) return x;
  if (x < -37.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

namespace {

// y*eta - n*log(1+exp(eta)): binomial log-likelihood up to the constant
// binomial coefficient, stable for any eta.
double cell_loglik(int y, int n, double eta) {
  return y * eta - n * log1pexp(eta);
}

}  // namespace

LogisticSampler::LogisticSampler(const LogisticConfig& config, const Dataset& data)
    : config_(config), data_(data), I_(data.I()), J_(data.J()), D_(data.D()) {
  n_beta_rows_ = (config.variant == LogisticVariant::separate ||
                  config.variant == LogisticVariant::no_error)
                     ? J_
                     : 1;
  n_eps_cols_ = config.variant == LogisticVariant::no_error ? 0
                : config.variant == LogisticVariant::shared_beta_eps ? 1
                                                                     : J_;
  beta_ = Eigen::MatrixXd::Zero(n_beta_rows_, D_);
  eps_ = Eigen::MatrixXd::Zero(I_, std::max(1, n_eps_cols_));
  beta_logstep_ =
      Eigen::MatrixXd::Constant(n_beta_rows_, D_, std::log(config.init_step));
  eps_logstep_ = Eigen::MatrixXd::Constant(I_, std::max(1, n_eps_cols_),
                                           std::log(config.init_step));
  beta_acc_ = Eigen::MatrixXd::Zero(n_beta_rows_, D_);
  beta_try_ = Eigen::MatrixXd::Zero(n_beta_rows_, D_);
  eta_.resize(I_, J_);
  cell_ll_.resize(I_, J_);
  refresh_cache();
}

double LogisticSampler::eps_accept_rate() const {
  return eps_try_ > 0 ? eps_acc_ / eps_try_ : 0.0;
}

Eigen::MatrixXd LogisticSampler::beta_accept_rate() const {
  return beta_try_.cwiseMax(1.0).cwiseInverse().cwiseProduct(beta_acc_);
}

void LogisticSampler::refresh_cache() {
  for (int i = 0; i < I_; ++i)
    for (int j = 0; j < J_; ++j) {
      int b = n_beta_rows_ == 1 ? 0 : j;
      double e = n_eps_cols_ == 0 ? 0.0
                 : n_eps_cols_ == 1 ? eps_(i, 0)
                                    : eps_(i, j);
      eta_(i, j) = data_.X.row(i).dot(beta_.row(b)) + e;
      cell_ll_(i, j) = cell_loglik(data_.Y(i, j), data_.n(i, j), eta_(i, j));
    }
}

void LogisticSampler::update_beta_scalar(Rng& rng, int b, int d, double gamma,
                                         bool adapting) {
  double step = std::exp(beta_logstep_(b, d));
  double delta = step * rng.std_normal();
  double old = beta_(b, d);
  double dprior = -(2 * old * delta + delta * delta) / (2 * config_.prior_var_beta);

  double dlik = 0;
  int j_lo = n_beta_rows_ == 1 ? 0 : b;
  int j_hi = n_beta_rows_ == 1 ? J_ - 1 : b;
  for (int j = j_lo; j <= j_hi; ++j)
    for (int i = 0; i < I_; ++i)
      dlik += cell_loglik(data_.Y(i, j), data_.n(i, j),
                          eta_(i, j) + data_.X(i, d) * delta) -
              cell_ll_(i, j);

  bool accepted = std::log(rng.uniform()) < dlik + dprior;
  if (accepted) {
    beta_(b, d) = old + delta;
    for (int j = j_lo; j <= j_hi; ++j)
      for (int i = 0; i < I_; ++i) {
        eta_(i, j) += data_.X(i, d) * delta;
        cell_ll_(i, j) = cell_loglik(data_.Y(i, j), data_.n(i, j), eta_(i, j));
      }
  }
  beta_try_(b, d) += 1;
  beta_acc_(b, d) += accepted ? 1 : 0;
  window_proposals_ += 1;
  window_accepts_ += accepted ? 1 : 0;
  if (adapting)
    beta_logstep_(b, d) += gamma * ((accepted ? 1.0 : 0.0) - config_.target_accept);
}

void LogisticSampler::update_eps_scalar(Rng& rng, int i, int c, double gamma,
                                        bool adapting) {
  double step = std::exp(eps_logstep_(i, c));
  double delta = step * rng.std_normal();
  double old = eps_(i, c);
  double dprior = -(2 * old * delta + delta * delta) / (2 * sigma2_);

  double dlik = 0;
  int j_lo = n_eps_cols_ == 1 ? 0 : c;
  int j_hi = n_eps_cols_ == 1 ? J_ - 1 : c;
  for (int j = j_lo; j <= j_hi; ++j)
    dlik += cell_loglik(data_.Y(i, j), data_.n(i, j), eta_(i, j) + delta) -
            cell_ll_(i, j);

  bool accepted = std::log(rng.uniform()) < dlik + dprior;
  if (accepted) {
    eps_(i, c) = old + delta;
    for (int j = j_lo; j <= j_hi; ++j) {
      eta_(i, j) += delta;
      cell_ll_(i, j) = cell_loglik(data_.Y(i, j), data_.n(i, j), eta_(i, j));
    }
  }
  eps_try_ += 1;
  eps_acc_ += accepted ? 1 : 0;
  window_proposals_ += 1;
  window_accepts_ += accepted ? 1 : 0;
  if (adapting)
    eps_logstep_(i, c) += gamma * ((accepted ? 1.0 : 0.0) - config_.target_accept);
}

void LogisticSampler::sweep(Rng& rng, int it, int burn_in) {
  bool adapting = config_.adapt && it <= burn_in;
  double gamma = std::pow(static_cast<double>(it), -0.6);
  for (int b = 0; b < n_beta_rows_; ++b)
    for (int d = 0; d < D_; ++d) update_beta_scalar(rng, b, d, gamma, adapting);
  if (n_eps_cols_ > 0) {
    for (int i = 0; i < I_; ++i)
      for (int c = 0; c < n_eps_cols_; ++c)
        update_eps_scalar(rng, i, c, gamma, adapting);
    double ss = eps_.leftCols(n_eps_cols_).squaredNorm();
    double n_eps = static_cast<double>(I_) * n_eps_cols_;
    sigma2_ = rng.sample_inverse_gamma(config_.ig_shape + 0.5 * n_eps,
                                       config_.ig_rate + 0.5 * ss);
  }
  if (it % config_.adapt_window == 0) {
    if (window_proposals_ > 0 && window_accepts_ == 0)
      throw numeric_error("logistic chain divergent: no acceptances in the " +
                          std::to_string(config_.adapt_window) +
                          "-sweep window ending at sweep " + std::to_string(it));
    window_proposals_ = window_accepts_ = 0;
  }
}

LogisticDraws fit_logistic(const LogisticConfig& config, const Dataset& data,
                           const ChainConfig& chain) {
  config.validate();
  chain.validate();
  data.validate();

  Rng rng(chain.seed);
  LogisticSampler sw(config, data);

  LogisticDraws out;
  out.variant = config.variant;
  out.J = data.J();
  out.D = data.D();
  out.beta.reserve(chain.retained());
  for (int it = 1; it <= chain.iterations; ++it) {
    sw.sweep(rng, it, chain.burn_in);
    if (it > chain.burn_in && (it - chain.burn_in) % chain.thin == 0) {
      out.beta.push_back(sw.beta());
      if (sw.eps_cols() > 0) {
        out.eps.push_back(sw.eps_block());
        out.sigma2.push_back(sw.sigma2());
      }
    }
  }
  out.beta_accept = sw.beta_accept_rate();
  out.eps_accept = sw.eps_accept_rate();
  out.beta_step = sw.beta_logstep().array().exp();
  return out;
}

double logistic_predictive_lppl(Rng& rng, const LogisticDraws& draws,
                                const Dataset& test, Eigen::VectorXd* subject_lppl,
                                Eigen::MatrixXd* phi, bool randomized_pit) {
  const int T = static_cast<int>(draws.beta.size());
  if (T < 1) throw input_error("logistic_predictive_lppl: no draws");
  const int I = test.I(), J = test.J();
  const bool has_eps = draws.variant != LogisticVariant::no_error;
  const bool shared_eps = draws.variant == LogisticVariant::shared_beta_eps;

  if (subject_lppl) *subject_lppl = Eigen::VectorXd::Zero(I);
  if (phi) *phi = Eigen::MatrixXd::Zero(I, J);

  double total = 0;
  Eigen::MatrixXd p_draws(T, J);
  for (int i = 0; i < I; ++i) {
    Eigen::VectorXd above = Eigen::VectorXd::Zero(J), ties = Eigen::VectorXd::Zero(J);
    for (int t = 0; t < T; ++t) {
      double eps_shared = 0;
      if (has_eps && shared_eps) eps_shared = rng.normal(0.0, draws.sigma2[t]);
      for (int j = 0; j < J; ++j) {
        int b = draws.beta[t].rows() == 1 ? 0 : j;
        double e = 0;
        if (has_eps) e = shared_eps ? eps_shared : rng.normal(0.0, draws.sigma2[t]);
        double p = inv_logit(test.X.row(i).dot(draws.beta[t].row(b)) + e);
        p_draws(t, j) = p;
        if (phi) {
          int y = rng.sample_binomial(test.n(i, j), p);
          if (y > test.Y(i, j)) above[j] += 1;
          if (y == test.Y(i, j)) ties[j] += 1;
        }
      }
    }
    double l = lppl_for_subject(p_draws, test.Y.row(i).transpose(),
                                test.n.row(i).transpose());
    if (subject_lppl) (*subject_lppl)[i] = l;
    if (phi)
      for (int j = 0; j < J; ++j) {
        double q = above[j] / T;
        if (randomized_pit) q += rng.uniform() * ties[j] / T;
        (*phi)(i, j) = q;
      }
    total += l;
  }
  return total;
}

CvReport logistic_cross_validate(std::uint64_t seed, const LogisticConfig& config,
                                 const ChainConfig& chain, const Dataset& data,
                                 int K, const CvOptions& options) {
  data.validate();
  config.validate();
  const int I = data.I(), J = data.J();
  auto folds = make_folds(seed, I, K);

  CvReport report;
  report.K = K;
  report.randomized_pit = options.randomized_pit;
  report.fold_of_subject.assign(I, -1);
  report.subject_lppl = Eigen::VectorXd::Zero(I);
  report.phi = Eigen::MatrixXd::Zero(I, J);
  for (int f = 0; f < K; ++f)
    for (int i : folds[f]) report.fold_of_subject[i] = f;

  for (int f = 0; f < K; ++f) {
    std::vector<int> train_idx;
    for (int i = 0; i < I; ++i)
      if (report.fold_of_subject[i] != f) train_idx.push_back(i);
    Dataset train = data.subset(train_idx);
    Eigen::VectorXd mu, sd;
    standardize_columns(train.X, &mu, &sd);

    ChainConfig fold_chain = chain;
    fold_chain.seed = mix_seed(seed, 0xBA5Eull + static_cast<std::uint64_t>(f));
    LogisticDraws draws = fit_logistic(config, train, fold_chain);

    Dataset test = data.subset(folds[f]);
    for (int r = 0; r < test.I(); ++r)
      test.X.row(r) = ((data.X.row(folds[f][r]).transpose() - mu).array() / sd.array())
                          .matrix()
                          .transpose();

    Rng rng(mix_seed(seed, 0x10619ull + static_cast<std::uint64_t>(f)));
    Eigen::VectorXd sub_lppl;
    Eigen::MatrixXd phi;
    logistic_predictive_lppl(rng, draws, test, &sub_lppl, &phi,
                             options.randomized_pit);
    for (int r = 0; r < test.I(); ++r) {
      report.subject_lppl[folds[f][r]] = sub_lppl[r];
      report.phi.row(folds[f][r]) = phi.row(r);
    }
  }
  report.lppl_total = report.subject_lppl.sum();
  return report;
}

void save_logistic_draws(const LogisticDraws& draws, const LogisticConfig& config,
                         const ChainConfig& chain, const Dataset& data,
                         const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["family"] = "logistic";
  j["variant"] = to_string(config.variant);
  j["prior_var_beta"] = config.prior_var_beta;
  j["ig_shape"] = config.ig_shape;
  j["ig_rate"] = config.ig_rate;
  j["chain"] = {{"iterations", chain.iterations},
                {"burn_in", chain.burn_in},
                {"thin", chain.thin},
                {"seed", chain.seed}};
  j["dims"] = {{"I", data.I()}, {"J", data.J()}, {"D", data.D()}};
  j["dataset_hash"] = hex_u64(data.hash());
  j["config_hash"] = hex_u64(mix_seed(config.hash(), chain.hash()));
  j["draw_count"] = draws.beta.size();
  j["beta_acceptance"] = std::vector<double>(
      draws.beta_accept.data(), draws.beta_accept.data() + draws.beta_accept.size());
  j["eps_acceptance"] = draws.eps_accept;
  {
    std::ofstream f(fs::path(dir) / "meta.json");
    if (!f) throw input_error("cannot write meta.json in " + dir);
    f << j.dump(2) << "\n";
  }

  auto dump_matrix_series = [&](const std::string& name,
                                const std::vector<Eigen::MatrixXd>& series) {
    std::ofstream f(fs::path(dir) / (name + ".csv"));
    if (!f) throw input_error("cannot write " + name + ".csv in " + dir);
    f << "draw";
    if (!series.empty())
      for (long a = 0; a < series[0].rows(); ++a)
        for (long b = 0; b < series[0].cols(); ++b)
          f << "," << name << "_" << (a + 1) << "_" << (b + 1);
    f << "\n";
    for (size_t t = 0; t < series.size(); ++t) {
      f << (t + 1);
      for (long a = 0; a < series[t].rows(); ++a)
        for (long b = 0; b < series[t].cols(); ++b) f << "," << fmt_g17(series[t](a, b));
      f << "\n";
    }
  };
  dump_matrix_series("beta", draws.beta);
  if (!draws.eps.empty()) dump_matrix_series("eps", draws.eps);
  if (!draws.sigma2.empty()) {
    std::ofstream f(fs::path(dir) / "sigma2.csv");
    f << "draw,sigma2\n";
    for (size_t t = 0; t < draws.sigma2.size(); ++t)
      f << (t + 1) << "," << fmt_g17(draws.sigma2[t]) << "\n";
  }
}

}  // namespace tensorstick
