#include "tensorstick/gibbs.hpp"

#include <cmath>

namespace tensorstick {

namespace {

constexpr double kThetaClamp = 1e-12;  // Beta draws can underflow to 0/1

double clamp_theta(double t) {
  return std::min(std::max(t, kThetaClamp), 1.0 - kThetaClamp);
}

void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what,
                  int iteration) {
  if (!m.allFinite())
    throw numeric_error(std::string("NaN/inf in ") + what + " at iteration " +
                        std::to_string(iteration));
}

void check_finite(double x, const char* what, int iteration) {
  if (!std::isfinite(x))
    throw numeric_error(std::string("NaN/inf in ") + what + " at iteration " +
                        std::to_string(iteration));
}

}  // namespace

void ChainConfig::validate() const {
  if (burn_in < 0) throw input_error("ChainConfig: burn_in must be >= 0");
  if (iterations <= burn_in)
    throw input_error("ChainConfig: iterations must exceed burn_in");
  if (thin < 1) throw input_error("ChainConfig: thin must be >= 1");
}

std::uint64_t ChainConfig::hash() const {
  std::string s = "it=" + std::to_string(iterations) + ";burn=" +
                  std::to_string(burn_in) + ";thin=" + std::to_string(thin) +
                  ";lat=" + std::to_string(store_latents ? 1 : 0);
  return fnv1a64(s);
}

Array3 coef_residual(const ParamState& state) {
  const int I = static_cast<int>(state.C.rows());
  const int J = static_cast<int>(state.C.cols());
  const int H = state.H();
  Array3 z = state.Zstar;
  if (state.err.present()) z.v -= error_term(state.err, I, J, H).v;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      for (int h = 0; h < H; ++h) z(i, j, h) -= state.Zjh(j, h);
  return z;
}

Array3 err_residual(const ParamState& state, const Eigen::MatrixXd& X) {
  const int I = static_cast<int>(state.C.rows());
  const int J = static_cast<int>(state.C.cols());
  const int H = state.H();
  Array3 z = state.Zstar;
  if (state.coef.present()) z.v -= coef_term(state.coef, X, J, H).v;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      for (int h = 0; h < H; ++h) z(i, j, h) -= state.Zjh(j, h);
  return z;
}

Array3 intercept_residual(const ParamState& state, const Eigen::MatrixXd& X) {
  const int I = static_cast<int>(state.C.rows());
  const int J = static_cast<int>(state.C.cols());
  const int H = state.H();
  Array3 z = state.Zstar;
  if (state.coef.present()) z.v -= coef_term(state.coef, X, J, H).v;
  if (state.err.present()) z.v -= error_term(state.err, I, J, H).v;
  return z;
}

GaussianPosterior coef_b1_conditional(const ParamState& state,
                                      const Eigen::MatrixXd& X, const Array3& zB) {
  const int I = static_cast<int>(state.C.rows());
  const int J = static_cast<int>(state.C.cols());
  const int D = static_cast<int>(X.cols());
  const int R = state.coef.cp.rank();
  const auto& B2 = state.coef.cp.F2;
  const auto& B3 = state.coef.cp.F3;

  long n_active = 0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) n_active += state.C(i, j) + 1;

  Eigen::MatrixXd W(n_active, static_cast<long>(D) * R);
  Eigen::VectorXd z(n_active);
  long row = 0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      for (int h = 0; h <= state.C(i, j); ++h) {
        // w[(d,r)] = X(i,d) * B2(j,r) * B3(h,r), d-major
        for (int d = 0; d < D; ++d)
          for (int r = 0; r < R; ++r)
            W(row, static_cast<long>(d) * R + r) = X(i, d) * B2(j, r) * B3(h, r);
        z[row] = zB(i, j, h);
        ++row;
      }
  return gaussian_linear_update(W, z, Eigen::VectorXd::Ones(static_cast<long>(D) * R));
}

GaussianPosterior coef_b2_row_conditional(const ParamState& state,
                                          const Eigen::MatrixXd& XB1,
                                          const Array3& zB, int j) {
  const int I = static_cast<int>(state.C.rows());
  const int R = static_cast<int>(XB1.cols());
  const auto& B3 = state.coef.cp.F3;

  long n_active = 0;
  for (int i = 0; i < I; ++i) n_active += state.C(i, j) + 1;
  Eigen::MatrixXd W(n_active, R);
  Eigen::VectorXd z(n_active);
  long row = 0;
  for (int i = 0; i < I; ++i)
    for (int h = 0; h <= state.C(i, j); ++h) {
      for (int r = 0; r < R; ++r) W(row, r) = XB1(i, r) * B3(h, r);
      z[row] = zB(i, j, h);
      ++row;
    }
  return gaussian_linear_update(W, z, Eigen::VectorXd::Ones(R));
}

GaussianPosterior coef_b3_row_conditional(const ParamState& state,
                                          const Eigen::MatrixXd& XB1,
                                          const Array3& zB, int h) {
  const int I = static_cast<int>(state.C.rows());
  const int J = static_cast<int>(state.C.cols());
  const int R = static_cast<int>(XB1.cols());
  const auto& B2 = state.coef.cp.F2;

  long n_active = 0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      if (state.C(i, j) >= h) ++n_active;
  Eigen::MatrixXd W(n_active, R);
  Eigen::VectorXd z(n_active);
  long row = 0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      if (state.C(i, j) < h) continue;
      for (int r = 0; r < R; ++r) W(row, r) = XB1(i, r) * B2(j, r);
      z[row] = zB(i, j, h);
      ++row;
    }
  return gaussian_linear_update(W, z, Eigen::VectorXd::Ones(R));
}

GaussianPosterior coef_full_conditional(const ParamState& state,
                                        const Eigen::MatrixXd& X, const Array3& zB,
                                        int j, int h) {
  const int I = static_cast<int>(state.C.rows());
  const int D = static_cast<int>(X.cols());
  long n_active = 0;
  for (int i = 0; i < I; ++i)
    if (state.C(i, j) >= h) ++n_active;
  Eigen::MatrixXd W(n_active, D);
  Eigen::VectorXd z(n_active);
  long row = 0;
  for (int i = 0; i < I; ++i) {
    if (state.C(i, j) < h) continue;
    W.row(row) = X.row(i);
    z[row] = zB(i, j, h);
    ++row;
  }
  return gaussian_linear_update(W, z, Eigen::VectorXd::Ones(D));
}

GaussianPosterior coef_shared_conditional(const ParamState& state,
                                          const Eigen::MatrixXd& X,
                                          const Array3& zB, int h) {
  const int I = static_cast<int>(state.C.rows());
  const int J = static_cast<int>(state.C.cols());
  const int D = static_cast<int>(X.cols());
  long n_active = 0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      if (state.C(i, j) >= h) ++n_active;
  Eigen::MatrixXd W(n_active, D);
  Eigen::VectorXd z(n_active);
  long row = 0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      if (state.C(i, j) < h) continue;
      W.row(row) = X.row(i);
      z[row] = zB(i, j, h);
      ++row;
    }
  return gaussian_linear_update(W, z, Eigen::VectorXd::Ones(D));
}

GaussianPosterior err_e1_row_conditional(const ParamState& state,
                                         const Eigen::MatrixXd& E23,
                                         const Array3& zE, int i) {
  const int J = static_cast<int>(state.C.cols());
  const int H = state.H();
  const int Re = static_cast<int>(E23.cols());
  long n_active = 0;
  for (int j = 0; j < J; ++j) n_active += state.C(i, j) + 1;
  Eigen::MatrixXd W(n_active, Re);
  Eigen::VectorXd z(n_active);
  long row = 0;
  for (int j = 0; j < J; ++j)
    for (int h = 0; h <= state.C(i, j); ++h) {
      W.row(row) = E23.row(static_cast<long>(j) * H + h);
      z[row] = zE(i, j, h);
      ++row;
    }
  return gaussian_linear_update(W, z, state.sigma2.cwiseInverse());
}

GaussianPosterior err_e2_row_conditional(const ParamState& state, const Array3& zE,
                                         int j) {
  const int I = static_cast<int>(state.C.rows());
  const int Re = state.err.cp.rank();
  const auto& E1 = state.err.cp.F1;
  const auto& E3 = state.err.cp.F3;
  long n_active = 0;
  for (int i = 0; i < I; ++i) n_active += state.C(i, j) + 1;
  Eigen::MatrixXd W(n_active, Re);
  Eigen::VectorXd z(n_active);
  long row = 0;
  for (int i = 0; i < I; ++i)
    for (int h = 0; h <= state.C(i, j); ++h) {
      for (int r = 0; r < Re; ++r) W(row, r) = E1(i, r) * E3(h, r);
      z[row] = zE(i, j, h);
      ++row;
    }
  return gaussian_linear_update(W, z, Eigen::VectorXd::Ones(Re));
}

GaussianPosterior err_e3_row_conditional(const ParamState& state, const Array3& zE,
                                         int h) {
  const int I = static_cast<int>(state.C.rows());
  const int J = static_cast<int>(state.C.cols());
  const int Re = state.err.cp.rank();
  const auto& E1 = state.err.cp.F1;
  const auto& E2 = state.err.cp.F2;
  long n_active = 0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      if (state.C(i, j) >= h) ++n_active;
  Eigen::MatrixXd W(n_active, Re);
  Eigen::VectorXd z(n_active);
  long row = 0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      if (state.C(i, j) < h) continue;
      for (int r = 0; r < Re; ++r) W(row, r) = E1(i, r) * E2(j, r);
      z[row] = zE(i, j, h);
      ++row;
    }
  return gaussian_linear_update(W, z, Eigen::VectorXd::Ones(Re));
}

void update_allocations(Rng& rng, ParamState& state, const Dataset& data,
                        const StickWeights& sticks) {
  const int I = data.I(), J = data.J(), H = state.H();
  Eigen::VectorXd log_theta(H), log_1m_theta(H);
  for (int h = 0; h < H; ++h) {
    double t = clamp_theta(state.theta[h]);
    log_theta[h] = std::log(t);
    log_1m_theta[h] = std::log1p(-t);
  }
  Eigen::VectorXd logw(H);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      const double y = data.Y(i, j);
      const double m = data.n(i, j) - y;
      for (int h = 0; h < H; ++h)
        logw[h] = std::log(sticks.pi(i, j, h)) + y * log_theta[h] +
                  m * log_1m_theta[h];
      state.C(i, j) = rng.sample_categorical_log(logw);
    }
}

void update_atoms(Rng& rng, ParamState& state, const Dataset& data,
                  const ModelConfig& config) {
  const int H = state.H();
  Eigen::VectorXd ysum = Eigen::VectorXd::Zero(H), nsum = Eigen::VectorXd::Zero(H);
  for (int i = 0; i < data.I(); ++i)
    for (int j = 0; j < data.J(); ++j) {
      int h = state.C(i, j);
      ysum[h] += data.Y(i, j);
      nsum[h] += data.n(i, j);
    }
  for (int h = 0; h < H; ++h)
    state.theta[h] = rng.sample_beta(config.beta_a + ysum[h],
                                     config.beta_b + nsum[h] - ysum[h]);
}

void update_latent_probits(Rng& rng, ParamState& state, const Eigen::MatrixXd& X) {
  const int I = static_cast<int>(state.C.rows());
  const int J = static_cast<int>(state.C.cols());
  Array3 mu = linear_predictor(state, X);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      const int c = state.C(i, j);
      for (int h = 0; h < c; ++h)
        state.Zstar(i, j, h) =
            rng.sample_trunc_std_normal(mu(i, j, h), TruncSide::negative);
      state.Zstar(i, j, c) =
          rng.sample_trunc_std_normal(mu(i, j, c), TruncSide::positive);
    }
}

void update_coefficients(Rng& rng, ParamState& state, const Eigen::MatrixXd& X) {
  if (!state.coef.present()) return;
  const int J = static_cast<int>(state.C.cols());
  const int H = state.H();
  const int D = static_cast<int>(X.cols());
  Array3 zB = coef_residual(state);

  switch (state.coef.kind) {
    case CoefStructure::low_rank: {
      const int R = state.coef.cp.rank();
      Eigen::VectorXd v = coef_b1_conditional(state, X, zB).sample(rng);
      for (int d = 0; d < D; ++d)
        for (int r = 0; r < R; ++r) state.coef.cp.F1(d, r) = v[static_cast<long>(d) * R + r];
      Eigen::MatrixXd XB1 = X * state.coef.cp.F1;
      for (int j = 0; j < J; ++j)
        state.coef.cp.F2.row(j) =
            coef_b2_row_conditional(state, XB1, zB, j).sample(rng).transpose();
      for (int h = 0; h < H; ++h)
        state.coef.cp.F3.row(h) =
            coef_b3_row_conditional(state, XB1, zB, h).sample(rng).transpose();
      break;
    }
    case CoefStructure::full:
      for (int j = 0; j < J; ++j)
        for (int h = 0; h < H; ++h) {
          Eigen::VectorXd col = coef_full_conditional(state, X, zB, j, h).sample(rng);
          for (int d = 0; d < D; ++d) state.coef.dense(d, j, h) = col[d];
        }
      break;
    case CoefStructure::shared_types:
      for (int h = 0; h < H; ++h)
        state.coef.shared.col(h) = coef_shared_conditional(state, X, zB, h).sample(rng);
      break;
    case CoefStructure::none:
      break;
  }
}

void update_individual_effects(Rng& rng, ParamState& state,
                               const Eigen::MatrixXd& X) {
  if (!state.err.present()) return;
  const int I = static_cast<int>(state.C.rows());
  const int J = static_cast<int>(state.C.cols());
  const int H = state.H();
  Array3 zE = err_residual(state, X);

  Eigen::MatrixXd E23 = factor_column_outer(state.err.cp.F2, state.err.cp.F3);
  for (int i = 0; i < I; ++i)
    state.err.cp.F1.row(i) =
        err_e1_row_conditional(state, E23, zE, i).sample(rng).transpose();
  for (int j = 0; j < J; ++j)
    state.err.cp.F2.row(j) =
        err_e2_row_conditional(state, zE, j).sample(rng).transpose();
  for (int h = 0; h < H; ++h)
    state.err.cp.F3.row(h) =
        err_e3_row_conditional(state, zE, h).sample(rng).transpose();
}

void update_scales(Rng& rng, ParamState& state, const ModelConfig& config) {
  if (!state.err.present()) return;
  const int I = static_cast<int>(state.err.cp.F1.rows());
  for (long r = 0; r < state.sigma2.size(); ++r) {
    double ss = state.err.cp.F1.col(r).squaredNorm();
    state.sigma2[r] = rng.sample_inverse_gamma(config.ig_shape + 0.5 * I,
                                               config.ig_rate + 0.5 * ss);
  }
}

void update_intercepts(Rng& rng, ParamState& state, const Eigen::MatrixXd& X) {
  const int I = static_cast<int>(state.C.rows());
  const int J = static_cast<int>(state.C.cols());
  const int H = state.H();
  Array3 zZ = intercept_residual(state, X);
  for (int j = 0; j < J; ++j)
    for (int h = 0; h < H; ++h) {
      double sum = 0;
      int m = 0;
      for (int i = 0; i < I; ++i) {
        if (state.C(i, j) < h) continue;
        sum += zZ(i, j, h);
        ++m;
      }
      state.Zjh(j, h) =
          rng.normal((state.alpha + sum) / (m + 1.0), 1.0 / (m + 1.0));
    }
}

void update_concentration(Rng& rng, ParamState& state) {
  const double jh = static_cast<double>(state.Zjh.size());
  state.alpha = rng.normal(state.Zjh.sum() / (jh + 1.0), 1.0 / (jh + 1.0));
}

ParamState initialize_state(Rng& rng, const ModelConfig& config,
                            const Dataset& data) {
  const int I = data.I(), J = data.J(), D = data.D(), H = config.H;
  ParamState st;
  st.theta.resize(H);
  for (int h = 0; h < H; ++h)
    st.theta[h] = rng.sample_beta(config.beta_a, config.beta_b);
  std::sort(st.theta.data(), st.theta.data() + H, std::greater<double>());
  st.alpha = 0.0;
  st.Zjh = Eigen::MatrixXd::Zero(J, H);

  const double init_sd = 0.1;
  st.coef.kind = config.coef;
  switch (config.coef) {
    case CoefStructure::none:
      break;
    case CoefStructure::shared_types:
      st.coef.shared.resize(D, H);
      for (int d = 0; d < D; ++d)
        for (int h = 0; h < H; ++h) st.coef.shared(d, h) = init_sd * rng.std_normal();
      break;
    case CoefStructure::full:
      st.coef.dense = Array3(D, J, H);
      for (long k = 0; k < st.coef.dense.v.size(); ++k)
        st.coef.dense.v[k] = init_sd * rng.std_normal();
      break;
    case CoefStructure::low_rank:
      st.coef.cp.F1.resize(D, config.rank);
      st.coef.cp.F2.resize(J, config.rank);
      st.coef.cp.F3.resize(H, config.rank);
      for (auto* f : {&st.coef.cp.F1, &st.coef.cp.F2, &st.coef.cp.F3})
        for (long a = 0; a < f->rows(); ++a)
          for (long b = 0; b < f->cols(); ++b) (*f)(a, b) = init_sd * rng.std_normal();
      break;
  }

  st.err.kind = config.error;
  if (config.error == ErrorStructure::low_rank) {
    const int Re = config.error_rank;
    st.sigma2 = Eigen::VectorXd::Ones(Re);
    st.err.cp.F1.resize(I, Re);
    st.err.cp.F2.resize(J, Re);
    st.err.cp.F3.resize(H, Re);
    for (auto* f : {&st.err.cp.F1, &st.err.cp.F2, &st.err.cp.F3})
      for (long a = 0; a < f->rows(); ++a)
        for (long b = 0; b < f->cols(); ++b) (*f)(a, b) = init_sd * rng.std_normal();
  }

  st.C.resize(I, J);
  st.Zstar = Array3(I, J, H);
  StickWeights sticks = compute_sticks(st, data.X);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      int best = 0;
      double best_lw = -std::numeric_limits<double>::infinity();
      for (int h = 0; h < H; ++h) {
        double t = clamp_theta(st.theta[h]);
        double lw = std::log(sticks.pi(i, j, h)) + data.Y(i, j) * std::log(t) +
                    (data.n(i, j) - data.Y(i, j)) * std::log1p(-t);
        if (lw > best_lw) {
          best_lw = lw;
          best = h;
        }
      }
      st.C(i, j) = best;
    }
  update_latent_probits(rng, st, data.X);
  return st;
}

StickWeights gibbs_sweep(Rng& rng, ParamState& state, const Dataset& data,
                         const ModelConfig& config, const StickWeights& sticks,
                         int iteration) {
  // Attach the step name and iteration to any numeric breakdown so a chain
  // abort is traceable.
  auto guarded = [&](const char* step, auto&& fn) {
    try {
      fn();
    } catch (const numeric_error& e) {
      throw numeric_error(std::string(e.what()) + " (step " + step +
                          ", iteration " + std::to_string(iteration) + ")");
    }
  };

  guarded("allocations", [&] { update_allocations(rng, state, data, sticks); });
  guarded("atoms", [&] {
    update_atoms(rng, state, data, config);
    check_finite(state.theta, "atoms", iteration);
  });
  guarded("latent probits", [&] { update_latent_probits(rng, state, data.X); });
  guarded("coefficients", [&] {
    update_coefficients(rng, state, data.X);
    if (state.coef.kind == CoefStructure::low_rank) {
      check_finite(state.coef.cp.F1, "coefficient factor B1", iteration);
      check_finite(state.coef.cp.F2, "coefficient factor B2", iteration);
      check_finite(state.coef.cp.F3, "coefficient factor B3", iteration);
    } else if (state.coef.kind == CoefStructure::full) {
      check_finite(state.coef.dense.v, "coefficient array", iteration);
    } else if (state.coef.kind == CoefStructure::shared_types) {
      check_finite(state.coef.shared, "shared coefficients", iteration);
    }
  });
  guarded("individual effects", [&] {
    update_individual_effects(rng, state, data.X);
    if (state.err.present()) {
      check_finite(state.err.cp.F1, "effect factor E1", iteration);
      check_finite(state.err.cp.F2, "effect factor E2", iteration);
      check_finite(state.err.cp.F3, "effect factor E3", iteration);
    }
  });
  guarded("scales", [&] {
    update_scales(rng, state, config);
    if (state.err.present()) check_finite(state.sigma2, "sigma2", iteration);
  });
  guarded("intercepts", [&] {
    update_intercepts(rng, state, data.X);
    check_finite(state.Zjh, "intercepts", iteration);
  });
  guarded("concentration", [&] {
    update_concentration(rng, state);
    check_finite(state.alpha, "concentration", iteration);
  });
  StickWeights out{Array3(), Array3()};
  guarded("stick recomputation", [&] { out = compute_sticks(state, data.X); });
  return out;
}

Snapshot snapshot_of(const ParamState& state, const Dataset& data,
                     bool store_latents) {
  Snapshot s;
  s.theta = state.theta;
  s.Zjh = state.Zjh;
  s.alpha = state.alpha;
  s.coef = state.coef;
  s.err = state.err;
  s.sigma2 = state.sigma2;
  s.C = state.C;
  if (store_latents) s.Zstar = state.Zstar;
  s.loglik = loglik(state, data);
  return s;
}

DrawStore run_chain(const ChainConfig& chain, const ModelConfig& model,
                    const Dataset& data) {
  chain.validate();
  model.validate();
  data.validate();

  DrawStore store;
  store.meta.model = model;
  store.meta.chain = chain;
  store.meta.I = data.I();
  store.meta.J = data.J();
  store.meta.D = data.D();
  store.meta.dataset_hash = data.hash();
  store.meta.config_hash = mix_seed(model.hash(), chain.hash());
  store.meta.covariate_names = data.covariate_names;
  store.meta.type_names = data.types;
  store.meta.x_mean = data.x_mean;
  store.meta.x_sd = data.x_sd;
  store.draws.reserve(chain.retained());

  Rng rng(chain.seed);
  ParamState state = initialize_state(rng, model, data);
  StickWeights sticks = compute_sticks(state, data.X);
  for (int it = 1; it <= chain.iterations; ++it) {
    sticks = gibbs_sweep(rng, state, data, model, sticks, it);
    if (it > chain.burn_in && (it - chain.burn_in) % chain.thin == 0)
      store.draws.push_back(snapshot_of(state, data, chain.store_latents));
  }
  return store;
}

}  // namespace tensorstick
