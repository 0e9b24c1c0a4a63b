#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tensorstick/baselines.hpp"
#include "tensorstick/predictive.hpp"
#include "tensorstick/simstudy.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace tensorstick;

namespace {

// JSON config file: a flat object keyed by long option names. Values apply
// only where the flag was not given on the command line (flags win).
class JsonConfig {
 public:
  void load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw input_error("cannot open config file " + path);
    try {
      j_ = nlohmann::json::parse(f);
    } catch (const std::exception& e) {
      throw input_error("config file " + path + ": " + e.what());
    }
    if (!j_.is_object()) throw input_error("config file must hold a JSON object");
  }

  template <class T>
  void maybe(const CLI::App& app, const std::string& flag, T& target) const {
    if (j_.is_null() || !j_.contains(flag)) return;
    const CLI::Option* opt = app.get_option("--" + flag);
    if (opt && opt->count() > 0) return;
    try {
      target = j_.at(flag).get<T>();
    } catch (const std::exception&) {
      throw input_error("config key '" + flag + "' has the wrong type");
    }
  }

 private:
  nlohmann::json j_;
};

struct ModelFlags {
  int H = 25;
  std::string coef = "low_rank";
  int rank = 1;
  std::string error = "none";
  int error_rank = 1;
  double beta_a = 1.0, beta_b = 1.0;

  void attach(CLI::App& app) {
    app.add_option("--H", H, "stick-breaking truncation level");
    app.add_option("--coef", coef, "coefficient structure: none|shared_types|full|low_rank");
    app.add_option("--rank", rank, "coefficient CP rank (low_rank only)");
    app.add_option("--error", error, "individual-effect structure: none|low_rank");
    app.add_option("--error-rank", error_rank, "individual-effect CP rank");
    app.add_option("--beta-a", beta_a, "Beta base distribution a");
    app.add_option("--beta-b", beta_b, "Beta base distribution b");
  }
  void merge(const CLI::App& app, const JsonConfig& cfg) {
    cfg.maybe(app, "H", H);
    cfg.maybe(app, "coef", coef);
    cfg.maybe(app, "rank", rank);
    cfg.maybe(app, "error", error);
    cfg.maybe(app, "error-rank", error_rank);
    cfg.maybe(app, "beta-a", beta_a);
    cfg.maybe(app, "beta-b", beta_b);
  }
  ModelConfig build() const {
    ModelConfig m;
    m.H = H;
    m.coef = coef_structure_from_string(coef);
    m.rank = rank;
    m.error = error_structure_from_string(error);
    m.error_rank = error_rank;
    m.beta_a = beta_a;
    m.beta_b = beta_b;
    m.validate();
    return m;
  }
};

struct ChainFlags {
  int iterations = 2000, burn_in = 1000, thin = 1;
  bool store_latents = false;

  void attach(CLI::App& app) {
    app.add_option("--iters", iterations, "total Gibbs iterations");
    app.add_option("--burnin", burn_in, "burn-in iterations");
    app.add_option("--thin", thin, "thinning interval");
    app.add_flag("--store-latents", store_latents, "persist latent probit draws");
  }
  void merge(const CLI::App& app, const JsonConfig& cfg) {
    cfg.maybe(app, "iters", iterations);
    cfg.maybe(app, "burnin", burn_in);
    cfg.maybe(app, "thin", thin);
    cfg.maybe(app, "store-latents", store_latents);
  }
  ChainConfig build(std::uint64_t seed) const {
    ChainConfig c;
    c.iterations = iterations;
    c.burn_in = burn_in;
    c.thin = thin;
    c.seed = seed;
    c.store_latents = store_latents;
    c.validate();
    return c;
  }
};

std::vector<double> sorted_column(const std::vector<double>& v) {
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  return s;
}

ordered_json quantile_summary(const std::vector<double>& values) {
  auto s = sorted_column(values);
  auto pick = [&](double q) {
    size_t idx = std::min(s.size() - 1, static_cast<size_t>(q * s.size()));
    return s[idx];
  };
  double mean = 0;
  for (double x : s) mean += x;
  mean /= static_cast<double>(s.size());
  return ordered_json{{"mean", mean},
                      {"q025", pick(0.025)},
                      {"q500", pick(0.5)},
                      {"q975", pick(0.975)}};
}

void write_fit_summary(const DrawStore& store, const std::string& path) {
  const auto& meta = store.meta;
  const int T = static_cast<int>(store.draws.size());
  ordered_json j;
  j["seed"] = meta.chain.seed;
  j["config_hash"] = hex_u64(meta.config_hash);
  j["dataset_hash"] = hex_u64(meta.dataset_hash);
  j["draws"] = T;
  j["model"] = {{"H", meta.model.H},
                {"coef_structure", to_string(meta.model.coef)},
                {"rank", meta.model.rank},
                {"error_structure", to_string(meta.model.error)},
                {"error_rank", meta.model.error_rank}};

  std::vector<double> alpha;
  alpha.reserve(T);
  for (const auto& s : store.draws) alpha.push_back(s.alpha);
  j["alpha"] = quantile_summary(alpha);

  if (meta.model.error == ErrorStructure::low_rank && T > 0) {
    ordered_json arr = ordered_json::array();
    for (int r = 0; r < meta.model.error_rank; ++r) {
      std::vector<double> col;
      col.reserve(T);
      for (const auto& s : store.draws) col.push_back(s.sigma2[r]);
      ordered_json e = quantile_summary(col);
      e["r"] = r + 1;
      arr.push_back(e);
    }
    j["sigma2"] = arr;
  }

  if (meta.model.coef == CoefStructure::low_rank && T > 0) {
    ordered_json b1 = ordered_json::array();
    for (int d = 0; d < meta.D; ++d)
      for (int r = 0; r < meta.model.rank; ++r) {
        std::vector<double> col;
        col.reserve(T);
        for (const auto& s : store.draws) col.push_back(s.coef.cp.F1(d, r));
        ordered_json e = quantile_summary(col);
        e["covariate"] = meta.covariate_names[d];
        e["r"] = r + 1;
        b1.push_back(e);
      }
    j["b1_loadings"] = b1;
    ordered_json b2 = ordered_json::array();
    for (int t = 0; t < meta.J; ++t)
      for (int r = 0; r < meta.model.rank; ++r) {
        std::vector<double> col;
        col.reserve(T);
        for (const auto& s : store.draws) col.push_back(s.coef.cp.F2(t, r));
        ordered_json e = quantile_summary(col);
        e["type"] = meta.type_names[t];
        e["r"] = r + 1;
        b2.push_back(e);
      }
    j["b2_loadings"] = b2;
  }

  std::vector<double> ll;
  ll.reserve(T);
  for (const auto& s : store.draws) ll.push_back(s.loglik);
  j["loglik"] = quantile_summary(ll);

  std::ofstream f(path);
  if (!f) throw input_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::string field;
  std::stringstream ss(s);
  while (std::getline(ss, field, ','))
    out.push_back(static_cast<int>(std::stol(field)));
  if (out.empty()) throw input_error("empty integer list '" + s + "'");
  return out;
}

int cmd_fit(const std::string& outcomes, const std::string& covariates,
            const std::string& out, std::uint64_t seed, const ModelFlags& mf,
            const ChainFlags& cf) {
  if (outcomes.empty() || covariates.empty())
    throw input_error("fit: --outcomes and --covariates are required");
  if (out.empty()) throw input_error("fit: --out is required");
  Dataset data = load_dataset(outcomes, covariates);
  DrawStore store = run_chain(cf.build(seed), mf.build(), data);
  fs::create_directories(out);
  store.save((fs::path(out) / "draws").string());
  write_fit_summary(store, (fs::path(out) / "summary.json").string());
  return 0;
}

int cmd_cv(const std::string& outcomes, const std::string& covariates,
           const std::string& out, std::uint64_t seed, const ModelFlags& mf,
           const ChainFlags& cf, int folds, bool randomized_pit, int jobs) {
  if (outcomes.empty() || covariates.empty())
    throw input_error("cv: --outcomes and --covariates are required");
  if (out.empty()) throw input_error("cv: --out is required");
  Dataset data = load_dataset(outcomes, covariates);
  ModelConfig m = mf.build();
  ChainConfig c = cf.build(seed);
  CvOptions opt;
  opt.randomized_pit = randomized_pit;
  opt.jobs = jobs;
  CvReport report = cross_validate(seed, m, c, data, folds, opt);
  fs::create_directories(out);
  write_cv_report_json(report, data, seed, mix_seed(m.hash(), c.hash()),
                       (fs::path(out) / "cv_report.json").string());
  write_quantiles_csv(report, data, (fs::path(out) / "quantiles.csv").string());
  std::printf("LPPL: %.6f\n", report.lppl_total);
  return 0;
}

int cmd_predict(const std::string& draws_dir, const std::string& profiles,
                const std::string& ntrials, const std::string& out,
                std::uint64_t seed) {
  if (draws_dir.empty() || profiles.empty())
    throw input_error("predict: --draws and --profiles are required");
  if (out.empty()) throw input_error("predict: --out is required");
  DrawStore store = DrawStore::load(draws_dir);
  const int J = store.meta.J;

  std::vector<int> nvec = parse_int_list(ntrials);
  if (nvec.size() == 1) nvec.assign(J, nvec[0]);
  if (static_cast<int>(nvec.size()) != J)
    throw input_error("predict: --ntrials needs " + std::to_string(J) + " values");
  Eigen::VectorXi n_tilde(J);
  for (int j = 0; j < J; ++j) n_tilde[j] = nvec[j];

  std::ifstream f(profiles);
  if (!f) throw input_error("cannot open profiles file " + profiles);
  std::string line;
  if (!std::getline(f, line)) throw input_error(profiles + ": empty file");
  ordered_json result = ordered_json::array();
  int line_no = 1, idx = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (static_cast<int>(fields.size()) != store.meta.D + 1)
      throw input_error(profiles + " line " + std::to_string(line_no) + ": expected " +
                        std::to_string(store.meta.D + 1) + " fields, got " +
                        std::to_string(fields.size()));
    Eigen::VectorXd x(store.meta.D);
    for (int d = 0; d < store.meta.D; ++d) x[d] = std::stod(fields[d + 1]);

    Rng rng(mix_seed(seed, 0x947Eull + static_cast<std::uint64_t>(idx)));
    ProfilePrediction pred = predict_profile(rng, store, x, n_tilde);
    ordered_json types = ordered_json::array();
    for (int j = 0; j < J; ++j) {
      ordered_json tj;
      tj["type"] = store.meta.type_names[j];
      tj["n"] = n_tilde[j];
      tj["p_q025"] = pred.p_quantiles(j, 0);
      tj["p_q500"] = pred.p_quantiles(j, 1);
      tj["p_q975"] = pred.p_quantiles(j, 2);
      tj["y_histogram"] = std::vector<double>(
          pred.y_hist[j].data(), pred.y_hist[j].data() + pred.y_hist[j].size());
      types.push_back(tj);
    }
    result.push_back({{"profile", fields[0]}, {"types", types}});
    ++idx;
  }
  fs::create_directories(out);
  ordered_json doc;
  doc["seed"] = seed;
  doc["config_hash"] = hex_u64(store.meta.config_hash);
  doc["profiles"] = result;
  std::ofstream g(fs::path(out) / "predictions.json");
  if (!g) throw input_error("cannot write predictions.json");
  g << doc.dump(2) << "\n";
  return 0;
}

int cmd_simulate(const std::string& kind, const std::string& grid_preset,
                 const std::string& out, std::uint64_t seed, int subjects,
                 const std::string& trials, int H, const ChainFlags& cf, int folds,
                 int jobs, int replications) {
  if (out.empty()) throw input_error("simulate: --out is required");
  if (kind.empty() == grid_preset.empty())
    throw input_error("simulate: give exactly one of --kind or --grid");
  fs::create_directories(out);

  if (!kind.empty()) {
    SimDesign design;
    design.kind = sim_kind_from_string(kind);
    design.I = subjects;
    design.H = H;
    design.seed = seed;
    if (!trials.empty()) design.n_per_type = parse_int_list(trials);
    auto [data, truth] = generate(design);
    write_dataset_csv(data, (fs::path(out) / "outcomes.csv").string(),
                      (fs::path(out) / "covariates.csv").string());
    ordered_json j;
    j["kind"] = to_string(design.kind);
    j["seed"] = seed;
    std::vector<double> pflat(truth.p.data(), truth.p.data() + truth.p.size());
    j["p_col_major"] = pflat;
    if (design.kind == SimKind::logistic) {
      j["beta"] = std::vector<double>(truth.beta.data(),
                                      truth.beta.data() + truth.beta.size());
      j["eps"] =
          std::vector<double>(truth.eps.data(), truth.eps.data() + truth.eps.size());
    } else {
      j["alpha"] = truth.state.alpha;
      j["theta"] = std::vector<double>(truth.state.theta.data(),
                                       truth.state.theta.data() + truth.state.theta.size());
    }
    std::ofstream g(fs::path(out) / "truth.json");
    g << j.dump(2) << "\n";
    return 0;
  }

  SimKind gk;
  if (grid_preset == "table2-desk")
    gk = SimKind::logistic;
  else if (grid_preset == "table3-desk")
    gk = SimKind::lowrank_psb;
  else if (grid_preset == "table4-desk")
    gk = SimKind::fullrank_psb;
  else
    throw input_error("unknown grid preset '" + grid_preset +
                      "' (table2-desk|table3-desk|table4-desk)");

  DeskPreset preset = desk_preset(gk, seed);
  if (subjects > 0) preset.design.I = subjects;
  preset.chain.iterations = cf.iterations;
  preset.chain.burn_in = cf.burn_in;
  preset.chain.thin = cf.thin;
  if (folds > 0) preset.K = folds;

  GridResult grid = run_grid(seed, preset.design, preset.model, preset.chain,
                             preset.K, jobs, replications);
  std::string text = render_grid_text(grid);
  std::fputs(text.c_str(), stdout);
  write_grid_csv(grid, (fs::path(out) / "grid.csv").string());
  std::ofstream g(fs::path(out) / "grid.txt");
  g << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tensorstick: covariate-dependent stick-breaking binomial mixtures"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out, config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "master RNG seed");
    sub->add_option("--jobs", jobs, "parallel workers");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--config", config_path, "JSON config file (flags win)");
  };

  // fit
  CLI::App* fit = app.add_subcommand("fit", "fit the stick-breaking model");
  std::string fit_outcomes, fit_covariates;
  ModelFlags fit_model;
  ChainFlags fit_chain;
  fit->add_option("--outcomes", fit_outcomes, "outcomes CSV (subject,type,y,n)");
  fit->add_option("--covariates", fit_covariates, "covariates CSV");
  fit_model.attach(*fit);
  fit_chain.attach(*fit);
  add_common(fit);

  // predict
  CLI::App* predict = app.add_subcommand("predict", "posterior predictive export");
  std::string pred_draws, pred_profiles, pred_ntrials = "48";
  predict->add_option("--draws", pred_draws, "draw-store directory from fit");
  predict->add_option("--profiles", pred_profiles, "covariate profiles CSV");
  predict->add_option("--ntrials", pred_ntrials, "per-type trial counts, comma list");
  add_common(predict);

  // cv
  CLI::App* cv = app.add_subcommand("cv", "K-fold cross-validated LPPL");
  std::string cv_outcomes, cv_covariates;
  ModelFlags cv_model;
  ChainFlags cv_chain;
  int cv_folds = 10;
  bool cv_rpit = false;
  cv->add_option("--outcomes", cv_outcomes, "outcomes CSV");
  cv->add_option("--covariates", cv_covariates, "covariates CSV");
  cv->add_option("--folds", cv_folds, "number of folds (K = I gives leave-one-out)");
  cv->add_flag("--randomized-pit", cv_rpit, "randomize predictive-quantile ties");
  cv_model.attach(*cv);
  cv_chain.attach(*cv);
  add_common(cv);

  // simulate
  CLI::App* sim = app.add_subcommand("simulate", "simulation designs and LPPL grids");
  std::string sim_kind, sim_grid, sim_trials;
  int sim_subjects = 290, sim_H = 25, sim_folds = 0, sim_reps = 1;
  ChainFlags sim_chain;
  sim_chain.iterations = 1500;
  sim_chain.burn_in = 750;
  sim->add_option("--kind", sim_kind, "generate a dataset: logistic|lowrank_psb|fullrank_psb");
  sim->add_option("--grid", sim_grid, "run a comparison grid preset: table2-desk|table3-desk|table4-desk");
  sim->add_option("--subjects", sim_subjects, "number of subjects");
  sim->add_option("--trials", sim_trials, "per-type trial counts, comma list");
  sim->add_option("--sim-H", sim_H, "generative truncation level");
  sim->add_option("--folds", sim_folds, "CV folds for grid cells");
  sim->add_option("--replications", sim_reps, "grid replications (mean LPPL)");
  sim_chain.attach(*sim);
  add_common(sim);

  try {
    app.parse(argc, argv);

    JsonConfig cfg;
    if (!config_path.empty()) cfg.load(config_path);
    CLI::App* active = app.get_subcommands().front();
    cfg.maybe(*active, "seed", seed);
    cfg.maybe(*active, "jobs", jobs);
    cfg.maybe(*active, "out", out);

    if (fit->parsed()) {
      cfg.maybe(*fit, "outcomes", fit_outcomes);
      cfg.maybe(*fit, "covariates", fit_covariates);
      fit_model.merge(*fit, cfg);
      fit_chain.merge(*fit, cfg);
      return cmd_fit(fit_outcomes, fit_covariates, out, seed, fit_model, fit_chain);
    }
    if (predict->parsed()) {
      cfg.maybe(*predict, "draws", pred_draws);
      cfg.maybe(*predict, "profiles", pred_profiles);
      cfg.maybe(*predict, "ntrials", pred_ntrials);
      return cmd_predict(pred_draws, pred_profiles, pred_ntrials, out, seed);
    }
    if (cv->parsed()) {
      cfg.maybe(*cv, "outcomes", cv_outcomes);
      cfg.maybe(*cv, "covariates", cv_covariates);
      cfg.maybe(*cv, "folds", cv_folds);
      cfg.maybe(*cv, "randomized-pit", cv_rpit);
      cv_model.merge(*cv, cfg);
      cv_chain.merge(*cv, cfg);
      return cmd_cv(cv_outcomes, cv_covariates, out, seed, cv_model, cv_chain,
                    cv_folds, cv_rpit, jobs);
    }
    if (sim->parsed()) {
      cfg.maybe(*sim, "kind", sim_kind);
      cfg.maybe(*sim, "grid", sim_grid);
      cfg.maybe(*sim, "subjects", sim_subjects);
      cfg.maybe(*sim, "trials", sim_trials);
      cfg.maybe(*sim, "sim-H", sim_H);
      cfg.maybe(*sim, "folds", sim_folds);
      cfg.maybe(*sim, "replications", sim_reps);
      sim_chain.merge(*sim, cfg);
      return cmd_simulate(sim_kind, sim_grid, out, seed, sim_subjects, sim_trials,
                          sim_H, sim_chain, sim_folds, jobs, sim_reps);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
