#include "tensorstick/simstudy.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <thread>

#include "tensorstick/predictive.hpp"

namespace tensorstick {

std::string to_string(SimKind k) {
  switch (k) {
    case SimKind::logistic: return "logistic";
    case SimKind::lowrank_psb: return "lowrank_psb";
    case SimKind::fullrank_psb: return "fullrank_psb";
  }
  return "?";
}

SimKind sim_kind_from_string(const std::string& s) {
  if (s == "logistic") return SimKind::logistic;
  if (s == "lowrank_psb" || s == "lowrank") return SimKind::lowrank_psb;
  if (s == "fullrank_psb" || s == "fullrank") return SimKind::fullrank_psb;
  throw input_error("unknown simulation kind '" + s + "'");
}

void SimDesign::validate() const {
  if (I < 2 || J < 1 || D < 1) throw input_error("SimDesign: dimensions too small");
  if (H < 2) throw input_error("SimDesign: H must be >= 2");
  if (n_per_type.empty()) throw input_error("SimDesign: n_per_type empty");
  for (int n : n_per_type)
    if (n < 0) throw input_error("SimDesign: negative trial count");
}

Eigen::MatrixXi SimDesign::trial_counts() const {
  Eigen::MatrixXi n(I, J);
  for (int j = 0; j < J; ++j) {
    int nj = n_per_type[std::min<size_t>(j, n_per_type.size() - 1)];
    n.col(j).setConstant(nj);
  }
  return n;
}

Eigen::MatrixXd gen_covariates(Rng& rng, int I, int D) {
  if (I < 2) throw input_error("gen_covariates: need at least two subjects");
  Eigen::MatrixXd X(I, D);
  for (int d = 0; d < D; ++d) {
    bool binary = d >= 3 && d < 6;
    for (;;) {
      double first = 0;
      bool constant = true;
      for (int i = 0; i < I; ++i) {
        double x = binary ? (rng.uniform() < 0.5 ? 1.0 : 0.0) : rng.std_normal();
        X(i, d) = x;
        if (i == 0)
          first = x;
        else if (x != first)
          constant = false;
      }
      if (!constant) break;  // all-0/all-1 indicator column cannot be scaled
    }
  }
  standardize_columns(X, nullptr, nullptr);
  return X;
}

namespace {

Dataset finish_dataset(Eigen::MatrixXd X, Eigen::MatrixXi Y, Eigen::MatrixXi n) {
  Dataset data;
  const int I = static_cast<int>(X.rows());
  const int J = static_cast<int>(Y.cols());
  const int D = static_cast<int>(X.cols());
  data.X = std::move(X);
  data.Y = std::move(Y);
  data.n = std::move(n);
  for (int i = 0; i < I; ++i) data.subjects.push_back("s" + std::to_string(i + 1));
  for (int j = 0; j < J; ++j) data.types.push_back("t" + std::to_string(j + 1));
  for (int d = 0; d < D; ++d)
    data.covariate_names.push_back("x" + std::to_string(d + 1));
  data.x_mean = Eigen::VectorXd::Zero(D);
  data.x_sd = Eigen::VectorXd::Ones(D);
  data.validate();
  return data;
}

}  // namespace

std::pair<Dataset, SimTruth> gen_logistic_sim(Rng& rng, const SimDesign& design) {
  design.validate();
  const int I = design.I, J = design.J, D = design.D;
  Eigen::MatrixXd X = gen_covariates(rng, I, D);

  SimTruth truth;
  truth.beta = Eigen::VectorXd::Zero(D);
  const double canonical[6] = {0, 1, -1, 0, 1, -1};
  for (int d = 0; d < std::min(D, 6); ++d) truth.beta[d] = canonical[d];
  truth.eps.resize(I);
  for (int i = 0; i < I; ++i) truth.eps[i] = rng.std_normal();

  Eigen::MatrixXi n = design.trial_counts();
  Eigen::MatrixXi Y(I, J);
  truth.p.resize(I, J);
  for (int i = 0; i < I; ++i) {
    double p = inv_logit(X.row(i).dot(truth.beta) + truth.eps[i]);
    for (int j = 0; j < J; ++j) {
      truth.p(i, j) = p;  // identical across types within subject
      Y(i, j) = rng.sample_binomial(n(i, j), p);
    }
  }
  return {finish_dataset(std::move(X), std::move(Y), std::move(n)), truth};
}

namespace {

std::pair<Dataset, SimTruth> gen_psb_sim(Rng& rng, const SimDesign& design,
                                         CoefStructure coef) {
  design.validate();
  Eigen::MatrixXd X = gen_covariates(rng, design.I, design.D);
  ModelConfig config;
  config.H = design.H;
  config.coef = coef;
  config.rank = 1;
  config.error = ErrorStructure::none;  // types conditionally independent given X
  auto [state, data] = prior_generative_draw(rng, config, X, design.trial_counts());

  SimTruth truth;
  truth.p.resize(design.I, design.J);
  for (int i = 0; i < design.I; ++i)
    for (int j = 0; j < design.J; ++j) truth.p(i, j) = state.theta[state.C(i, j)];
  truth.state = std::move(state);
  return {std::move(data), std::move(truth)};
}

}  // namespace

std::pair<Dataset, SimTruth> gen_lowrank_psb_sim(Rng& rng, const SimDesign& design) {
  return gen_psb_sim(rng, design, CoefStructure::low_rank);
}

std::pair<Dataset, SimTruth> gen_fullrank_psb_sim(Rng& rng, const SimDesign& design) {
  return gen_psb_sim(rng, design, CoefStructure::full);
}

std::pair<Dataset, SimTruth> generate(const SimDesign& design) {
  Rng rng(design.seed);
  switch (design.kind) {
    case SimKind::logistic: return gen_logistic_sim(rng, design);
    case SimKind::lowrank_psb: return gen_lowrank_psb_sim(rng, design);
    case SimKind::fullrank_psb: return gen_fullrank_psb_sim(rng, design);
  }
  throw invariant_error("generate: unreachable");
}

double GridResult::psb_cell(const std::string& row, const std::string& col) const {
  for (size_t r = 0; r < psb_rows.size(); ++r)
    for (size_t c = 0; c < psb_cols.size(); ++c)
      if (psb_rows[r] == row && psb_cols[c] == col) return psb(r, c);
  throw input_error("GridResult: no cell " + row + "/" + col);
}

double GridResult::logistic_cell(const std::string& label) const {
  for (size_t k = 0; k < logistic_labels.size(); ++k)
    if (logistic_labels[k] == label) return logistic[k];
  throw input_error("GridResult: no logistic cell " + label);
}

GridResult run_grid(std::uint64_t seed, const SimDesign& design,
                    const ModelConfig& base, const ChainConfig& chain, int K,
                    int jobs, int replications) {
  if (replications < 1) throw input_error("run_grid: replications must be >= 1");
  GridResult grid;
  grid.replications = replications;
  grid.psb = Eigen::MatrixXd::Zero(4, 3);
  grid.logistic = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd psb_fail = Eigen::MatrixXd::Zero(4, 3);
  Eigen::VectorXd log_fail = Eigen::VectorXd::Zero(3);

  const CoefStructure coef_of[4] = {CoefStructure::none, CoefStructure::low_rank,
                                    CoefStructure::low_rank, CoefStructure::full};
  const int coef_rank[4] = {1, 1, 2, 1};
  const ErrorStructure err_of[3] = {ErrorStructure::none, ErrorStructure::low_rank,
                                    ErrorStructure::low_rank};
  const int err_rank[3] = {1, 1, 2};
  const LogisticVariant variants[3] = {LogisticVariant::separate,
                                       LogisticVariant::shared_beta,
                                       LogisticVariant::shared_beta_eps};

  for (int rep = 0; rep < replications; ++rep) {
    SimDesign d = design;
    d.seed = mix_seed(seed, 0xDA7Aull + static_cast<std::uint64_t>(rep));
    Dataset data = generate(d).first;
    // one shared CV seed per replication so every cell sees the same folds
    std::uint64_t cv_seed = mix_seed(seed, 0xCF01ull + static_cast<std::uint64_t>(rep));

    std::atomic<int> next{0};
    const int n_cells = 15;
    auto run_cell = [&](int cell) {
      try {
        if (cell < 12) {
          int r = cell / 3, c = cell % 3;
          ModelConfig m = base;
          m.coef = coef_of[r];
          m.rank = coef_rank[r];
          m.error = err_of[c];
          m.error_rank = err_rank[c];
          CvReport rep_out = cross_validate(cv_seed, m, chain, data, K);
          grid.psb(r, c) += rep_out.lppl_total;
        } else {
          int v = cell - 12;
          LogisticConfig lc;
          lc.variant = variants[v];
          CvReport rep_out = logistic_cross_validate(cv_seed, lc, chain, data, K);
          grid.logistic[v] += rep_out.lppl_total;
        }
      } catch (const std::exception& e) {
        std::fprintf(stderr, "grid cell %d failed: %s\n", cell, e.what());
        if (cell < 12)
          psb_fail(cell / 3, cell % 3) = 1;
        else
          log_fail[cell - 12] = 1;
      }
    };

    int workers = std::max(1, std::min(jobs, n_cells));
    if (workers == 1) {
      for (int cell = 0; cell < n_cells; ++cell) run_cell(cell);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (int cell = next.fetch_add(1); cell < n_cells;
               cell = next.fetch_add(1))
            run_cell(cell);
        });
      for (auto& t : pool) t.join();
    }
  }

  grid.psb /= replications;
  grid.logistic /= static_cast<double>(replications);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c)
      if (psb_fail(r, c) > 0) grid.psb(r, c) = nan;
  for (int v = 0; v < 3; ++v)
    if (log_fail[v] > 0) grid.logistic[v] = nan;
  return grid;
}

std::string render_grid_text(const GridResult& grid) {
  char buf[64];
  auto cell = [&](double v) {
    if (std::isnan(v)) return std::string("failed");
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return std::string(buf);
  };
  std::string out;
  out += "Mean LPPL (" + std::to_string(grid.replications) + " replication" +
         (grid.replications > 1 ? "s" : "") + ")\n\n";
  std::snprintf(buf, sizeof(buf), "%-16s", "Stick-breaking");
  out += buf;
  for (const auto& c : grid.psb_cols) {
    std::snprintf(buf, sizeof(buf), "%12s", c.c_str());
    out += buf;
  }
  out += "\n";
  for (int r = 0; r < 4; ++r) {
    std::snprintf(buf, sizeof(buf), "%-16s", grid.psb_rows[r].c_str());
    out += buf;
    for (int c = 0; c < 3; ++c) {
      std::snprintf(buf, sizeof(buf), "%12s", cell(grid.psb(r, c)).c_str());
      out += buf;
    }
    out += "\n";
  }
  out += "\n";
  std::snprintf(buf, sizeof(buf), "%-16s", "Logistic");
  out += buf;
  for (const auto& l : grid.logistic_labels) {
    std::snprintf(buf, sizeof(buf), "%16s", l.c_str());
    out += buf;
  }
  out += "\n";
  std::snprintf(buf, sizeof(buf), "%-16s", "");
  out += buf;
  for (int v = 0; v < 3; ++v) {
    std::snprintf(buf, sizeof(buf), "%16s", cell(grid.logistic[v]).c_str());
    out += buf;
  }
  out += "\n";
  return out;
}

void write_grid_csv(const GridResult& grid, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw input_error("cannot write " + path);
  f << "model,cell,lppl\n";
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c)
      f << "psb," << grid.psb_rows[r] << "/" << grid.psb_cols[c] << ","
        << fmt_g17(grid.psb(r, c)) << "\n";
  for (int v = 0; v < 3; ++v)
    f << "logistic," << grid.logistic_labels[v] << "," << fmt_g17(grid.logistic[v])
      << "\n";
}

DeskPreset desk_preset(SimKind kind, std::uint64_t seed) {
  DeskPreset preset;
  preset.design.kind = kind;
  preset.design.I = 150;
  preset.design.seed = seed;
  preset.model.H = 25;
  preset.chain.iterations = 1500;
  preset.chain.burn_in = 750;
  preset.chain.thin = 1;
  preset.chain.seed = seed;
  preset.K = 5;
  return preset;
}

}  // namespace tensorstick
