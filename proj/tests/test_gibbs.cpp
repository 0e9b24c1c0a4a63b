#include <cmath>
#include <filesystem>

#include <doctest.h>
#include <Eigen/LU>

#include "tensorstick/gibbs.hpp"

using namespace tensorstick;

namespace {

Dataset toy_data(Rng& rng, int I, int J, int D, int n_trials) {
  Dataset data;
  data.X.resize(I, D);
  for (int i = 0; i < I; ++i)
    for (int d = 0; d < D; ++d) data.X(i, d) = rng.std_normal();
  if (D > 0) standardize_columns(data.X, &data.x_mean, &data.x_sd);
  data.n = Eigen::MatrixXi::Constant(I, J, n_trials);
  data.Y.resize(I, J);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) data.Y(i, j) = rng.sample_binomial(n_trials, 0.4);
  return data;
}

ParamState plain_state(int I, int J, int H) {
  ParamState st;
  st.theta = Eigen::VectorXd::Constant(H, 0.5);
  st.Zjh = Eigen::MatrixXd::Zero(J, H);
  st.C = Eigen::MatrixXi::Zero(I, J);
  st.Zstar = Array3(I, J, H);
  return st;
}

bool states_equal_ignoring_placeholders(const ParamState& a, const ParamState& b) {
  if ((a.theta - b.theta).cwiseAbs().maxCoeff() != 0) return false;
  if ((a.Zjh - b.Zjh).cwiseAbs().maxCoeff() != 0) return false;
  if (a.alpha != b.alpha) return false;
  if ((a.C - b.C).cwiseAbs().maxCoeff() != 0) return false;
  if (a.coef.kind == CoefStructure::low_rank) {
    if ((a.coef.cp.F1 - b.coef.cp.F1).cwiseAbs().maxCoeff() != 0) return false;
    if ((a.coef.cp.F2 - b.coef.cp.F2).cwiseAbs().maxCoeff() != 0) return false;
    if ((a.coef.cp.F3 - b.coef.cp.F3).cwiseAbs().maxCoeff() != 0) return false;
  }
  if (a.err.present()) {
    if ((a.err.cp.F1 - b.err.cp.F1).cwiseAbs().maxCoeff() != 0) return false;
    if ((a.err.cp.F2 - b.err.cp.F2).cwiseAbs().maxCoeff() != 0) return false;
    if ((a.err.cp.F3 - b.err.cp.F3).cwiseAbs().maxCoeff() != 0) return false;
    if ((a.sigma2 - b.sigma2).cwiseAbs().maxCoeff() != 0) return false;
  }
  for (int i = 0; i < a.C.rows(); ++i)
    for (int j = 0; j < a.C.cols(); ++j)
      for (int h = 0; h <= a.C(i, j); ++h)
        if (a.Zstar(i, j, h) != b.Zstar(i, j, h)) return false;
  return true;
}

}  // namespace

TEST_CASE("update_atoms: Beta(a+Y, b+n-Y) conjugacy") {
  // one cell allocated to component 0 with Y=3, n=10 -> Beta(4, 8), mean 1/3
  Dataset data;
  data.X = Eigen::MatrixXd::Zero(1, 0);
  data.Y = Eigen::MatrixXi::Constant(1, 1, 3);
  data.n = Eigen::MatrixXi::Constant(1, 1, 10);
  ParamState st = plain_state(1, 1, 2);
  ModelConfig config;
  config.H = 2;

  Rng rng(51);
  const int N = 100000;
  double sum0 = 0, sum_empty = 0;
  for (int k = 0; k < N; ++k) {
    update_atoms(rng, st, data, config);
    sum0 += st.theta[0];
    sum_empty += st.theta[1];  // empty component: prior Beta(1,1)
  }
  CHECK(std::abs(sum0 / N - 1.0 / 3.0) < 0.005);
  CHECK(std::abs(sum_empty / N - 0.5) < 0.005);
}

TEST_CASE("update_allocations: degenerate and dominated cases") {
  Dataset data;
  data.X = Eigen::MatrixXd::Zero(1, 0);
  data.Y = Eigen::MatrixXi::Constant(1, 1, 48);
  data.n = Eigen::MatrixXi::Constant(1, 1, 48);

  ParamState st = plain_state(1, 1, 2);
  st.theta << 0.999999, 1e-6;
  StickWeights sticks{Array3(1, 1, 2), Array3(1, 1, 2)};
  sticks.pi(0, 0, 0) = 0.5;
  sticks.pi(0, 0, 1) = 0.5;

  Rng rng(52);
  for (int k = 0; k < 200; ++k) {
    update_allocations(rng, st, data, sticks);
    CHECK(st.C(0, 0) == 0);  // y = n = 48 overwhelms the uniform weights
  }

  sticks.pi(0, 0, 0) = 1.0;
  sticks.pi(0, 0, 1) = 0.0;
  st.theta << 0.5, 0.5;
  for (int k = 0; k < 200; ++k) {
    update_allocations(rng, st, data, sticks);
    CHECK(st.C(0, 0) == 0);
  }
}

TEST_CASE("update_allocations matches the enumeration oracle") {
  Dataset data;
  data.X = Eigen::MatrixXd::Zero(1, 0);
  data.Y = Eigen::MatrixXi::Constant(1, 1, 4);
  data.n = Eigen::MatrixXi::Constant(1, 1, 9);

  ParamState st = plain_state(1, 1, 3);
  st.theta << 0.3, 0.5, 0.8;
  StickWeights sticks{Array3(1, 1, 3), Array3(1, 1, 3)};
  sticks.pi(0, 0, 0) = 0.2;
  sticks.pi(0, 0, 1) = 0.5;
  sticks.pi(0, 0, 2) = 0.3;

  // normalized weights by direct enumeration
  Eigen::Vector3d w;
  for (int h = 0; h < 3; ++h)
    w[h] = sticks.pi(0, 0, h) * std::pow(st.theta[h], 4) *
           std::pow(1 - st.theta[h], 5);
  w /= w.sum();

  Rng rng(53);
  Eigen::Vector3d freq = Eigen::Vector3d::Zero();
  const int N = 100000;
  for (int k = 0; k < N; ++k) {
    update_allocations(rng, st, data, sticks);
    freq[st.C(0, 0)] += 1;
  }
  freq /= N;
  CHECK((freq - w).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("update_latent_probits: sign pattern and truncated means") {
  ParamState st = plain_state(1, 1, 3);
  st.C(0, 0) = 1;
  Eigen::MatrixXd X(1, 0);
  Rng rng(54);
  const int N = 100000;
  double neg_sum = 0, pos_sum = 0;
  for (int k = 0; k < N; ++k) {
    st.Zstar.set_zero();
    update_latent_probits(rng, st, X);
    REQUIRE(st.Zstar(0, 0, 0) < 0);   // h < C: negative side
    REQUIRE(st.Zstar(0, 0, 1) > 0);   // h = C: positive side
    CHECK(st.Zstar(0, 0, 2) == 0.0);  // beyond C: untouched placeholder
    neg_sum += st.Zstar(0, 0, 0);
    pos_sum += st.Zstar(0, 0, 1);
  }
  CHECK(std::abs(neg_sum / N + 0.79788456080286535588) < 0.01);
  CHECK(std::abs(pos_sum / N - 0.79788456080286535588) < 0.01);
}

TEST_CASE("coefficient update reduces to a ridge regression") {
  // R=1, B2=B3=[1], single type and component, everything active
  const int I = 40, D = 3;
  Rng rng(55);
  ParamState st = plain_state(I, 1, 1);
  st.coef.kind = CoefStructure::low_rank;
  st.coef.cp.F1 = Eigen::MatrixXd::Zero(D, 1);
  st.coef.cp.F2 = Eigen::MatrixXd::Ones(1, 1);
  st.coef.cp.F3 = Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd X(I, D);
  for (int i = 0; i < I; ++i)
    for (int d = 0; d < D; ++d) X(i, d) = rng.std_normal();
  for (int i = 0; i < I; ++i) st.Zstar(i, 0, 0) = rng.std_normal() + X(i, 0);

  Array3 zB = coef_residual(st);
  GaussianPosterior post = coef_b1_conditional(st, X, zB);

  Eigen::VectorXd z(I);
  for (int i = 0; i < I; ++i) z[i] = st.Zstar(i, 0, 0);
  Eigen::MatrixXd A = X.transpose() * X + Eigen::MatrixXd::Identity(D, D);
  Eigen::VectorXd ridge = A.fullPivLu().solve(X.transpose() * z);
  CHECK((post.mean - ridge).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("B1 synthetic recovery within 3 posterior SDs") {
  const int I = 60, J = 3, D = 2, H = 4, R = 1;
  Rng rng(56);
  ParamState st = plain_state(I, J, H);
  st.coef.kind = CoefStructure::low_rank;
  st.coef.cp.F1 = Eigen::MatrixXd::Zero(D, R);
  st.coef.cp.F2.resize(J, R);
  st.coef.cp.F3.resize(H, R);
  for (int j = 0; j < J; ++j) st.coef.cp.F2(j, 0) = rng.std_normal();
  for (int h = 0; h < H; ++h) st.coef.cp.F3(h, 0) = rng.std_normal();
  Eigen::MatrixXd X(I, D);
  for (int i = 0; i < I; ++i)
    for (int d = 0; d < D; ++d) X(i, d) = rng.std_normal();

  Eigen::VectorXd b1_true(D);
  b1_true << 1.2, -0.7;
  st.C.setConstant(H - 1);  // every stick active
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      for (int h = 0; h < H; ++h) {
        double mean =
            X.row(i).dot(b1_true) * st.coef.cp.F2(j, 0) * st.coef.cp.F3(h, 0);
        st.Zstar(i, j, h) = mean + rng.std_normal();
      }

  Array3 zB = coef_residual(st);
  GaussianPosterior post = coef_b1_conditional(st, X, zB);
  for (int d = 0; d < D; ++d) {
    double sd = std::sqrt(post.covariance(d, d));
    CHECK(std::abs(post.mean[d] - b1_true[d]) < 3 * sd);
  }
}

TEST_CASE("no active cells for a B3 row draws from the prior") {
  const int I = 5, J = 2, D = 2, H = 3;
  ParamState st = plain_state(I, J, H);
  st.coef.kind = CoefStructure::low_rank;
  st.coef.cp.F1 = Eigen::MatrixXd::Ones(D, 1);
  st.coef.cp.F2 = Eigen::MatrixXd::Ones(J, 1);
  st.coef.cp.F3 = Eigen::MatrixXd::Ones(H, 1);
  st.C.setZero();  // only stick 0 active anywhere
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(I, D);
  Array3 zB = coef_residual(st);
  Eigen::MatrixXd XB1 = X * st.coef.cp.F1;
  GaussianPosterior post = coef_b3_row_conditional(st, XB1, zB, 2);
  CHECK(post.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK((post.covariance - Eigen::MatrixXd::Identity(1, 1)).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("individual-effect update: scalar conjugacy and shrinkage limit") {
  const int I = 6, J = 1, H = 1, Re = 1;
  Rng rng(58);
  ParamState st = plain_state(I, J, H);
  st.err.kind = ErrorStructure::low_rank;
  st.err.cp.F1 = Eigen::MatrixXd::Zero(I, Re);
  st.err.cp.F2 = Eigen::MatrixXd::Ones(J, Re);
  st.err.cp.F3 = Eigen::MatrixXd::Ones(H, Re);
  st.sigma2 = Eigen::VectorXd::Constant(Re, 2.0);
  for (int i = 0; i < I; ++i) st.Zstar(i, 0, 0) = rng.std_normal();

  Array3 zE = err_residual(st, Eigen::MatrixXd(I, 0));
  Eigen::MatrixXd E23 = factor_column_outer(st.err.cp.F2, st.err.cp.F3);
  for (int i = 0; i < I; ++i) {
    GaussianPosterior post = err_e1_row_conditional(st, E23, zE, i);
    double var = 1.0 / (1.0 + 1.0 / 2.0);
    CHECK(post.covariance(0, 0) == doctest::Approx(var).epsilon(1e-12));
    CHECK(post.mean[0] == doctest::Approx(var * st.Zstar(i, 0, 0)).epsilon(1e-12));
  }

  // sigma^2 -> 0 forces the rows to the prior mean at zero
  st.sigma2[0] = 1e-8;
  Rng rng2(59);
  update_individual_effects(rng2, st, Eigen::MatrixXd(I, 0));
  CHECK(st.err.cp.F1.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("individual-effect update matches the dense solve when all active") {
  const int I = 7, J = 3, H = 4, Re = 2;
  Rng rng(60);
  ParamState st = plain_state(I, J, H);
  st.err.kind = ErrorStructure::low_rank;
  st.err.cp.F1 = Eigen::MatrixXd::Zero(I, Re);
  st.err.cp.F2.resize(J, Re);
  st.err.cp.F3.resize(H, Re);
  for (int j = 0; j < J; ++j)
    for (int r = 0; r < Re; ++r) st.err.cp.F2(j, r) = rng.std_normal();
  for (int h = 0; h < H; ++h)
    for (int r = 0; r < Re; ++r) st.err.cp.F3(h, r) = rng.std_normal();
  st.sigma2 = Eigen::VectorXd::Constant(Re, 1.7);
  st.C.setConstant(H - 1);  // no truncation masking
  for (long k = 0; k < st.Zstar.v.size(); ++k) st.Zstar.v[k] = rng.std_normal();

  Array3 zE = err_residual(st, Eigen::MatrixXd(I, 0));
  Eigen::MatrixXd E23 = factor_column_outer(st.err.cp.F2, st.err.cp.F3);
  for (int i = 0; i < I; ++i) {
    GaussianPosterior post = err_e1_row_conditional(st, E23, zE, i);
    Eigen::VectorXd z(J * H);
    for (int j = 0; j < J; ++j)
      for (int h = 0; h < H; ++h) z[j * H + h] = st.Zstar(i, j, h);
    Eigen::MatrixXd A = E23.transpose() * E23;
    A.diagonal() += st.sigma2.cwiseInverse();
    Eigen::VectorXd mean = A.fullPivLu().solve(E23.transpose() * z);
    CHECK((post.mean - mean).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("update_scales: inverse-gamma conditional") {
  const int I = 10;
  ModelConfig config;
  ParamState st;
  st.err.kind = ErrorStructure::low_rank;
  st.err.cp.F1 = Eigen::MatrixXd::Zero(I, 1);
  st.sigma2 = Eigen::VectorXd::Ones(1);

  // all-zero column: IG(0.1 + 5, 0.1), mean 0.1/4.1
  Rng rng(61);
  const int N = 100000;
  double sum = 0;
  for (int k = 0; k < N; ++k) {
    update_scales(rng, st, config);
    sum += st.sigma2[0];
  }
  CHECK(std::abs(sum / N - 0.1 / 4.1) < 0.002);

  // a large sum of squares concentrates near ss/I
  st.err.cp.F1 = Eigen::MatrixXd::Constant(I, 1, 30.0);
  double ss = st.err.cp.F1.squaredNorm();
  sum = 0;
  for (int k = 0; k < 2000; ++k) {
    update_scales(rng, st, config);
    sum += st.sigma2[0];
  }
  // mean = (0.1 + ss/2)/(0.1 + I/2 - 1), close to ss/I for large ss
  double want = (0.1 + 0.5 * ss) / (0.1 + 0.5 * I - 1.0);
  CHECK(std::abs(sum / 2000 - want) / want < 0.05);
  CHECK(std::abs(want - ss / I) / (ss / I) < 0.25);
}

TEST_CASE("update_intercepts: prior case and single-residual case") {
  const int I = 1, J = 1, H = 2;
  ParamState st = plain_state(I, J, H);
  st.alpha = 0.7;
  st.C(0, 0) = 0;
  st.Zstar(0, 0, 0) = 1.4;

  Rng rng(62);
  const int N = 200000;
  double s_active = 0, s2_active = 0, s_empty = 0, s2_empty = 0;
  for (int k = 0; k < N; ++k) {
    update_intercepts(rng, st, Eigen::MatrixXd(I, 0));
    s_active += st.Zjh(0, 0);
    s2_active += st.Zjh(0, 0) * st.Zjh(0, 0);
    s_empty += st.Zjh(0, 1);
    s2_empty += st.Zjh(0, 1) * st.Zjh(0, 1);
  }
  // active cell: N((alpha + z)/2, 1/2)
  double m_active = s_active / N, v_active = s2_active / N - m_active * m_active;
  CHECK(std::abs(m_active - (0.7 + 1.4) / 2) < 0.01);
  CHECK(std::abs(v_active - 0.5) < 0.01);
  // no active cells at h=1: N(alpha, 1)
  double m_empty = s_empty / N, v_empty = s2_empty / N - m_empty * m_empty;
  CHECK(std::abs(m_empty - 0.7) < 0.01);
  CHECK(std::abs(v_empty - 1.0) < 0.02);
}

TEST_CASE("update_intercepts matches a scalar-loop oracle in expectation") {
  const int I = 8, J = 2, H = 3;
  Rng rng(63);
  ParamState st = plain_state(I, J, H);
  st.alpha = -0.4;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      st.C(i, j) = static_cast<int>(rng.uniform() * H);
      for (int h = 0; h <= st.C(i, j); ++h) st.Zstar(i, j, h) = rng.std_normal();
    }
  Array3 zZ = intercept_residual(st, Eigen::MatrixXd(I, 0));

  // expected conditional means straight from the definition
  Eigen::MatrixXd want_mean(J, H);
  for (int j = 0; j < J; ++j)
    for (int h = 0; h < H; ++h) {
      double sum = 0;
      int m = 0;
      for (int i = 0; i < I; ++i)
        if (st.C(i, j) >= h) {
          sum += zZ(i, j, h);
          ++m;
        }
      want_mean(j, h) = (st.alpha + sum) / (m + 1.0);
    }

  const int N = 200000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(J, H);
  ParamState work = st;
  for (int k = 0; k < N; ++k) {
    work.Zstar = st.Zstar;
    update_intercepts(rng, work, Eigen::MatrixXd(I, 0));
    acc += work.Zjh;
  }
  CHECK(((acc / N) - want_mean).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("update_concentration moments") {
  ParamState st;
  st.Zjh = Eigen::MatrixXd::Zero(1, 1);
  Rng rng(64);
  const int N = 200000;
  double s = 0, s2 = 0;
  for (int k = 0; k < N; ++k) {
    update_concentration(rng, st);
    s += st.alpha;
    s2 += st.alpha * st.alpha;
  }
  CHECK(std::abs(s / N) < 0.01);                             // mean 0
  CHECK(std::abs(s2 / N - (s / N) * (s / N) - 0.5) < 0.01);  // var 1/2

  st.Zjh = Eigen::MatrixXd::Ones(2, 2);  // sum 4, JH = 4
  s = 0;
  s2 = 0;
  for (int k = 0; k < N; ++k) {
    update_concentration(rng, st);
    s += st.alpha;
    s2 += st.alpha * st.alpha;
  }
  CHECK(std::abs(s / N - 0.8) < 0.01);
  CHECK(std::abs(s2 / N - (s / N) * (s / N) - 0.2) < 0.01);
}

TEST_CASE("run_chain: determinism, retention, snapshot invariants") {
  Rng rng(65);
  Dataset data = toy_data(rng, 6, 2, 1, 12);
  ModelConfig model;
  model.H = 4;
  model.coef = CoefStructure::low_rank;
  model.rank = 1;
  model.error = ErrorStructure::low_rank;
  model.error_rank = 1;
  ChainConfig chain;
  chain.iterations = 60;
  chain.burn_in = 20;
  chain.thin = 2;
  chain.seed = 99;

  DrawStore a = run_chain(chain, model, data);
  DrawStore b = run_chain(chain, model, data);
  REQUIRE(static_cast<int>(a.draws.size()) == chain.retained());
  REQUIRE(a.draws.size() == b.draws.size());
  for (size_t t = 0; t < a.draws.size(); ++t) {
    CHECK((a.draws[t].theta - b.draws[t].theta).cwiseAbs().maxCoeff() == 0);
    CHECK(a.draws[t].alpha == b.draws[t].alpha);
    CHECK((a.draws[t].C - b.draws[t].C).cwiseAbs().maxCoeff() == 0);
    CHECK(a.draws[t].loglik == b.draws[t].loglik);
    for (int h = 0; h < model.H; ++h) {
      CHECK(a.draws[t].theta[h] > 0.0);
      CHECK(a.draws[t].theta[h] < 1.0);
    }
    CHECK(a.draws[t].sigma2.minCoeff() > 0.0);
  }

  // zero retained draws still yields metadata
  ChainConfig none = chain;
  none.iterations = chain.burn_in + 1;
  none.thin = 2;
  DrawStore empty = run_chain(none, model, data);
  CHECK(empty.draws.empty());
  CHECK(empty.meta.I == 6);
  CHECK(empty.meta.dataset_hash == data.hash());
}

TEST_CASE("placeholder Zstar entries never influence a sweep") {
  Rng rng(66);
  Dataset data = toy_data(rng, 5, 2, 1, 10);
  ModelConfig model;
  model.H = 4;
  model.coef = CoefStructure::low_rank;
  model.rank = 1;
  model.error = ErrorStructure::low_rank;
  model.error_rank = 1;

  Rng init_rng(67);
  ParamState base = initialize_state(init_rng, model, data);
  ParamState poked = base;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 2; ++j)
      for (int h = poked.C(i, j) + 1; h < model.H; ++h)
        poked.Zstar(i, j, h) = 1e6 + i + j + h;  // garbage beyond C

  StickWeights sticks_a = compute_sticks(base, data.X);
  StickWeights sticks_b = compute_sticks(poked, data.X);
  Rng ra(68), rb(68);
  gibbs_sweep(ra, base, data, model, sticks_a);
  gibbs_sweep(rb, poked, data, model, sticks_b);
  CHECK(states_equal_ignoring_placeholders(base, poked));
}

TEST_CASE("stick recomputation is idempotent") {
  Rng rng(69);
  Dataset data = toy_data(rng, 4, 2, 1, 8);
  ModelConfig model;
  model.H = 3;
  model.coef = CoefStructure::none;
  ParamState st = initialize_state(rng, model, data);
  StickWeights w1 = compute_sticks(st, data.X);
  StickWeights w2 = compute_sticks(st, data.X);
  CHECK((w1.V.v - w2.V.v).cwiseAbs().maxCoeff() == 0);
  CHECK((w1.pi.v - w2.pi.v).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("numeric failure carries the iteration label") {
  Rng rng(70);
  Dataset data = toy_data(rng, 4, 2, 1, 8);
  ModelConfig model;
  model.H = 3;
  model.coef = CoefStructure::none;
  ParamState st = initialize_state(rng, model, data);
  st.Zjh.setConstant(std::numeric_limits<double>::quiet_NaN());
  StickWeights sticks{Array3(4, 2, 3), Array3(4, 2, 3)};
  sticks.pi.v.setConstant(1.0 / 3);
  try {
    gibbs_sweep(rng, st, data, model, sticks, 7);
    FAIL("expected numeric_error");
  } catch (const numeric_error& e) {
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
}

TEST_CASE("draw store round trips through disk") {
  Rng rng(71);
  Dataset data = toy_data(rng, 5, 2, 2, 9);
  ModelConfig model;
  model.H = 3;
  model.coef = CoefStructure::low_rank;
  model.rank = 1;
  model.error = ErrorStructure::low_rank;
  model.error_rank = 1;
  ChainConfig chain;
  chain.iterations = 30;
  chain.burn_in = 10;
  chain.seed = 5;

  DrawStore store = run_chain(chain, model, data);
  auto dir = std::filesystem::temp_directory_path() / "ts_drawstore_test";
  std::filesystem::remove_all(dir);
  store.save(dir.string());
  DrawStore loaded = DrawStore::load(dir.string());

  REQUIRE(loaded.draws.size() == store.draws.size());
  CHECK(loaded.meta.dataset_hash == store.meta.dataset_hash);
  CHECK(loaded.meta.config_hash == store.meta.config_hash);
  CHECK(loaded.meta.model.coef == model.coef);
  for (size_t t = 0; t < store.draws.size(); ++t) {
    CHECK((loaded.draws[t].theta - store.draws[t].theta).cwiseAbs().maxCoeff() == 0);
    CHECK((loaded.draws[t].Zjh - store.draws[t].Zjh).cwiseAbs().maxCoeff() == 0);
    CHECK(loaded.draws[t].alpha == store.draws[t].alpha);
    CHECK((loaded.draws[t].coef.cp.F1 - store.draws[t].coef.cp.F1)
              .cwiseAbs()
              .maxCoeff() == 0);
    CHECK((loaded.draws[t].err.cp.F1 - store.draws[t].err.cp.F1)
              .cwiseAbs()
              .maxCoeff() == 0);
    CHECK((loaded.draws[t].sigma2 - store.draws[t].sigma2).cwiseAbs().maxCoeff() ==
          0);
    CHECK((loaded.draws[t].C - store.draws[t].C).cwiseAbs().maxCoeff() == 0);
  }
}

TEST_CASE("ChainConfig validation") {
  ChainConfig c;
  c.iterations = 10;
  c.burn_in = 10;
  CHECK_THROWS_AS(c.validate(), input_error);
  c.burn_in = -1;
  CHECK_THROWS_AS(c.validate(), input_error);
  c.burn_in = 5;
  c.thin = 0;
  CHECK_THROWS_AS(c.validate(), input_error);
}
