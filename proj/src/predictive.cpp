#include "tensorstick/predictive.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace tensorstick {

namespace {

// Runs fn(k) for k in [0, n) across `jobs` threads; work items must be
// independent. Exceptions are rethrown on the calling thread.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int k = next.fetch_add(1); k < n; k = next.fetch_add(1)) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double coef_entry(const CoefBlock& coef, const Eigen::RowVectorXd& xB1_or_x,
                  int j, int h) {
  switch (coef.kind) {
    case CoefStructure::none:
      return 0.0;
    case CoefStructure::shared_types:
      // caller passes x * shared, indexed by h
      return xB1_or_x[h];
    case CoefStructure::full: {
      double s = 0;
      for (int d = 0; d < coef.dense.n1; ++d)
        s += xB1_or_x[d] * coef.dense(d, j, h);
      return s;
    }
    case CoefStructure::low_rank: {
      double s = 0;
      for (int r = 0; r < coef.cp.rank(); ++r)
        s += xB1_or_x[r] * coef.cp.F2(j, r) * coef.cp.F3(h, r);
      return s;
    }
  }
  return 0.0;
}

}  // namespace

PredictiveSample predictive_draw(Rng& rng, const Snapshot& snap,
                                 const Eigen::VectorXd& x_tilde,
                                 const Eigen::VectorXi& n_tilde, int draw_index) {
  const int H = static_cast<int>(snap.theta.size());
  const int J = static_cast<int>(snap.Zjh.rows());
  if (n_tilde.size() != J)
    throw input_error("predictive_draw: trial-count vector length differs from J");

  // precompute the covariate projection appropriate for the structure
  Eigen::RowVectorXd proj;
  switch (snap.coef.kind) {
    case CoefStructure::none:
      proj.resize(0);
      break;
    case CoefStructure::shared_types:
      if (x_tilde.size() != snap.coef.shared.rows())
        throw input_error("predictive_draw: profile dimension mismatch");
      proj = x_tilde.transpose() * snap.coef.shared;  // 1 x H
      break;
    case CoefStructure::full:
      if (x_tilde.size() != snap.coef.dense.n1)
        throw input_error("predictive_draw: profile dimension mismatch");
      proj = x_tilde.transpose();
      break;
    case CoefStructure::low_rank:
      if (x_tilde.size() != snap.coef.cp.F1.rows())
        throw input_error("predictive_draw: profile dimension mismatch");
      proj = x_tilde.transpose() * snap.coef.cp.F1;  // 1 x R
      break;
  }

  // step 1: fresh subject effects
  const int Re = snap.err.present() ? snap.err.cp.rank() : 0;
  Eigen::RowVectorXd e1(Re);
  for (int r = 0; r < Re; ++r) e1[r] = rng.normal(0.0, snap.sigma2[r]);

  PredictiveSample out;
  out.draw_index = draw_index;
  out.p_tilde.resize(J);
  out.y_tilde.resize(J);
  Eigen::VectorXd logpi(H);
  for (int j = 0; j < J; ++j) {
    // step 2: sticks and weights for this type
    double remaining = 1.0;
    for (int h = 0; h < H; ++h) {
      double lin = snap.Zjh(j, h) + coef_entry(snap.coef, proj, j, h);
      for (int r = 0; r < Re; ++r)
        lin += e1[r] * snap.err.cp.F2(j, r) * snap.err.cp.F3(h, r);
      double vh = (h == H - 1) ? 1.0 : std_normal_cdf(lin);
      logpi[h] = std::log(vh * remaining);
      remaining *= (1.0 - vh);
    }
    // steps 3-4: atom pick, then the binomial outcome
    int h = rng.sample_categorical_log(logpi);
    out.p_tilde[j] = snap.theta[h];
    out.y_tilde[j] = rng.sample_binomial(n_tilde[j], out.p_tilde[j]);
  }
  return out;
}

double lppl_for_subject(const Eigen::MatrixXd& p_draws, const Eigen::VectorXi& Y_i,
                        const Eigen::VectorXi& n_i) {
  const long T = p_draws.rows();
  const long J = p_draws.cols();
  if (T < 1) throw input_error("lppl_for_subject: need at least one draw");
  if (Y_i.size() != J || n_i.size() != J)
    throw input_error("lppl_for_subject: dimension mismatch");
  Eigen::VectorXd s(T);
  for (long t = 0; t < T; ++t) {
    double acc = 0;
    for (long j = 0; j < J; ++j)
      acc += binomial_logpmf(Y_i[j], n_i[j], p_draws(t, j));
    s[t] = acc;
  }
  double m = s.maxCoeff();
  if (!std::isfinite(m)) return -std::numeric_limits<double>::infinity();
  double total = (s.array() - m).exp().sum();
  return m + std::log(total) - std::log(static_cast<double>(T));
}

std::vector<std::vector<int>> make_folds(std::uint64_t seed, int I, int K) {
  if (K < 2) throw input_error("make_folds: need K >= 2");
  if (K > I) throw input_error("make_folds: more folds than subjects");
  std::vector<int> perm(I);
  for (int i = 0; i < I; ++i) perm[i] = i;
  Rng rng(mix_seed(seed, 0xF01D5ull));
  for (int i = I - 1; i > 0; --i) {
    int k = static_cast<int>(rng.uniform() * (i + 1));
    if (k > i) k = i;
    std::swap(perm[i], perm[k]);
  }
  std::vector<std::vector<int>> folds(K);
  int base = I / K, extra = I % K, pos = 0;
  for (int f = 0; f < K; ++f) {
    int sz = base + (f < extra ? 1 : 0);
    if (sz == 0) throw input_error("make_folds: fold with zero subjects");
    for (int k = 0; k < sz; ++k) folds[f].push_back(perm[pos++]);
    std::sort(folds[f].begin(), folds[f].end());
  }
  return folds;
}

CvReport cross_validate(std::uint64_t seed, const ModelConfig& model,
                        const ChainConfig& chain, const Dataset& data, int K,
                        const CvOptions& options) {
  data.validate();
  model.validate();
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

  parallel_for(K, options.jobs, [&](int f) {
    std::vector<int> train_idx;
    train_idx.reserve(I - folds[f].size());
    for (int i = 0; i < I; ++i)
      if (report.fold_of_subject[i] != f) train_idx.push_back(i);

    Dataset train = data.subset(train_idx);
    Eigen::VectorXd mu, sd;
    standardize_columns(train.X, &mu, &sd);  // training statistics only
    train.x_mean = mu;
    train.x_sd = sd;

    ChainConfig fold_chain = chain;
    fold_chain.seed = mix_seed(seed, 0xC4A1ull + static_cast<std::uint64_t>(f));
    DrawStore store = run_chain(fold_chain, model, train);
    const int T = static_cast<int>(store.draws.size());
    if (T < 1) throw input_error("cross_validate: chain retained no draws");

    Rng rng(mix_seed(seed, 0x9E0Dull + static_cast<std::uint64_t>(f)));
    for (int i : folds[f]) {
      Eigen::VectorXd x_std =
          ((data.X.row(i).transpose() - mu).array() / sd.array()).matrix();
      Eigen::VectorXi n_i = data.n.row(i).transpose();
      Eigen::VectorXi y_i = data.Y.row(i).transpose();
      Eigen::MatrixXd p_draws(T, J);
      Eigen::VectorXd above = Eigen::VectorXd::Zero(J), ties = Eigen::VectorXd::Zero(J);
      for (int t = 0; t < T; ++t) {
        PredictiveSample ps = predictive_draw(rng, store.draws[t], x_std, n_i, t);
        p_draws.row(t) = ps.p_tilde.transpose();
        for (int j = 0; j < J; ++j) {
          if (ps.y_tilde[j] > y_i[j]) above[j] += 1;
          if (ps.y_tilde[j] == y_i[j]) ties[j] += 1;
        }
      }
      report.subject_lppl[i] = lppl_for_subject(p_draws, y_i, n_i);
      for (int j = 0; j < J; ++j) {
        double phi = above[j] / T;
        if (options.randomized_pit) phi += rng.uniform() * ties[j] / T;
        report.phi(i, j) = phi;
      }
    }
  });

  report.lppl_total = report.subject_lppl.sum();
  return report;
}

EcdfResult quantile_ecdf(std::vector<double> phi) {
  if (phi.empty()) throw input_error("quantile_ecdf: empty input");
  std::sort(phi.begin(), phi.end());
  const double m = static_cast<double>(phi.size());
  double ks = 0;
  for (size_t k = 0; k < phi.size(); ++k) {
    ks = std::max(ks, (k + 1) / m - phi[k]);
    ks = std::max(ks, phi[k] - k / m);
  }
  return {std::move(phi), ks};
}

ProfilePrediction predict_profile(Rng& rng, const DrawStore& store,
                                  const Eigen::VectorXd& x_raw,
                                  const Eigen::VectorXi& n_tilde) {
  const int J = store.meta.J;
  const int T = static_cast<int>(store.draws.size());
  if (T < 1) throw input_error("predict_profile: empty draw store");
  if (x_raw.size() != store.meta.D)
    throw input_error("predict_profile: profile has " + std::to_string(x_raw.size()) +
                      " covariates, model expects " + std::to_string(store.meta.D));
  Eigen::VectorXd x_std =
      ((x_raw - store.meta.x_mean).array() / store.meta.x_sd.array()).matrix();

  ProfilePrediction out;
  out.y_hist.reserve(J);
  for (int j = 0; j < J; ++j) out.y_hist.emplace_back(Eigen::VectorXd::Zero(n_tilde[j] + 1));
  Eigen::MatrixXd p_draws(T, J);
  for (int t = 0; t < T; ++t) {
    PredictiveSample ps = predictive_draw(rng, store.draws[t], x_std, n_tilde, t);
    p_draws.row(t) = ps.p_tilde.transpose();
    for (int j = 0; j < J; ++j) out.y_hist[j][ps.y_tilde[j]] += 1.0;
  }
  for (int j = 0; j < J; ++j) out.y_hist[j] /= T;

  out.p_quantiles.resize(J, 3);
  const double qs[3] = {0.025, 0.5, 0.975};
  for (int j = 0; j < J; ++j) {
    std::vector<double> col(p_draws.col(j).data(), p_draws.col(j).data() + T);
    std::sort(col.begin(), col.end());
    for (int q = 0; q < 3; ++q) {
      size_t idx = std::min<size_t>(T - 1, static_cast<size_t>(qs[q] * T));
      out.p_quantiles(j, q) = col[idx];
    }
  }
  return out;
}

void write_cv_report_json(const CvReport& report, const Dataset& data,
                          std::uint64_t seed, std::uint64_t config_hash,
                          const std::string& path) {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["config_hash"] = hex_u64(config_hash);
  j["dataset_hash"] = hex_u64(data.hash());
  j["folds"] = report.K;
  j["randomized_pit"] = report.randomized_pit;
  j["lppl_total"] = report.lppl_total;
  std::vector<double> phis(report.phi.data(), report.phi.data() + report.phi.size());
  j["quantile_ks"] = quantile_ecdf(phis).ks;
  nlohmann::ordered_json subjects = nlohmann::ordered_json::array();
  for (int i = 0; i < data.I(); ++i)
    subjects.push_back({{"subject", data.subjects[i]},
                        {"fold", report.fold_of_subject[i]},
                        {"log_predictive_density", report.subject_lppl[i]}});
  j["subjects"] = subjects;
  std::ofstream f(path);
  if (!f) throw input_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

void write_quantiles_csv(const CvReport& report, const Dataset& data,
                         const std::string& path) {
  std::ofstream f(path);
  if (!f) throw input_error("cannot write " + path);
  f << "subject,type,phi\n";
  for (int i = 0; i < data.I(); ++i)
    for (int j = 0; j < data.J(); ++j)
      f << data.subjects[i] << "," << data.types[j] << ","
        << fmt_g17(report.phi(i, j)) << "\n";
}

}  // namespace tensorstick
