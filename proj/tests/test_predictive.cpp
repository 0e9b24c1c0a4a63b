#include <algorithm>
#include <cmath>
#include <numeric>

#include <doctest.h>

#include "tensorstick/predictive.hpp"

using namespace tensorstick;

namespace {

Snapshot flat_snapshot(int J, int H) {
  Snapshot s;
  s.theta = Eigen::VectorXd::LinSpaced(H, 0.15, 0.85);
  s.Zjh = Eigen::MatrixXd::Zero(J, H);
  s.alpha = 0;
  s.coef.kind = CoefStructure::none;
  s.err.kind = ErrorStructure::none;
  return s;
}

Dataset tiny_prior_data(Rng& rng, int I, int J, int D, int H) {
  ModelConfig config;
  config.H = H;
  config.coef = CoefStructure::low_rank;
  config.rank = 1;
  config.error = ErrorStructure::none;
  Eigen::MatrixXd X(I, D);
  for (int i = 0; i < I; ++i)
    for (int d = 0; d < D; ++d) X(i, d) = rng.std_normal();
  standardize_columns(X, nullptr, nullptr);
  Eigen::MatrixXi n = Eigen::MatrixXi::Constant(I, J, 12);
  return prior_generative_draw(rng, config, X, n).second;
}

}  // namespace

TEST_CASE("predictive_draw: degenerate cases") {
  Snapshot s = flat_snapshot(2, 1);
  s.theta = Eigen::VectorXd::Constant(1, 0.37);
  s.Zjh = Eigen::MatrixXd::Zero(2, 1);
  Rng rng(81);
  Eigen::VectorXi n(2);
  n << 10, 0;
  for (int k = 0; k < 200; ++k) {
    PredictiveSample ps = predictive_draw(rng, s, Eigen::VectorXd(0), n, k);
    CHECK(ps.p_tilde[0] == 0.37);  // H=1: the single atom, always
    CHECK(ps.p_tilde[1] == 0.37);
    CHECK(ps.y_tilde[1] == 0);  // n = 0 forces a zero count
    CHECK(ps.y_tilde[0] >= 0);
    CHECK(ps.y_tilde[0] <= 10);
  }
}

TEST_CASE("predictive_draw matches direct mixture sampling") {
  const int H = 4;
  Snapshot s = flat_snapshot(1, H);
  Rng zr(82);
  for (int h = 0; h < H; ++h) s.Zjh(0, h) = zr.std_normal();

  // mixture weights by the scalar stick-breaking definition
  Eigen::VectorXd pi(H);
  double remaining = 1;
  for (int h = 0; h < H; ++h) {
    double v = (h == H - 1) ? 1.0 : std_normal_cdf(s.Zjh(0, h));
    pi[h] = v * remaining;
    remaining *= 1 - v;
  }

  Rng rng(83);
  Eigen::VectorXi n = Eigen::VectorXi::Constant(1, 5);
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(H);
  const int N = 10000;
  for (int k = 0; k < N; ++k) {
    PredictiveSample ps = predictive_draw(rng, s, Eigen::VectorXd(0), n, k);
    for (int h = 0; h < H; ++h)
      if (ps.p_tilde[0] == s.theta[h]) freq[h] += 1;
  }
  freq /= N;
  CHECK((freq - pi).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("predictive_draw resamples individual effects from their scale") {
  // with fresh E1 ~ N(0, sigma2), the first stick is Phi(Z + e*E2*E3);
  // compare the p-frequency law against an independent scalar simulation
  const int H = 3;
  Snapshot s = flat_snapshot(1, H);
  s.err.kind = ErrorStructure::low_rank;
  s.err.cp.F1 = Eigen::MatrixXd::Zero(5, 1);  // training rows, unused here
  s.err.cp.F2 = Eigen::MatrixXd::Constant(1, 1, 0.8);
  s.err.cp.F3 = Eigen::MatrixXd::Constant(H, 1, 1.3);
  s.sigma2 = Eigen::VectorXd::Constant(1, 2.25);

  Eigen::VectorXi n = Eigen::VectorXi::Constant(1, 3);
  Rng rng(84);
  const int N = 20000;
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(H);
  for (int k = 0; k < N; ++k) {
    PredictiveSample ps = predictive_draw(rng, s, Eigen::VectorXd(0), n, k);
    for (int h = 0; h < H; ++h)
      if (ps.p_tilde[h < 0 ? 0 : 0] == s.theta[h]) freq[h] += 1;
  }
  freq /= N;

  Rng oracle(85);
  Eigen::VectorXd want = Eigen::VectorXd::Zero(H);
  for (int k = 0; k < N; ++k) {
    double e1 = oracle.normal(0.0, 2.25);
    double remaining = 1;
    double u = oracle.uniform();
    double acc = 0;
    int pick = H - 1;
    for (int h = 0; h < H; ++h) {
      double v = (h == H - 1) ? 1.0 : std_normal_cdf(e1 * 0.8 * 1.3);
      double w = v * remaining;
      remaining *= 1 - v;
      acc += w;
      if (u <= acc) {
        pick = h;
        break;
      }
    }
    want[pick] += 1;
  }
  want /= N;
  CHECK((freq - want).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("lppl_for_subject: toy values and averaging") {
  Eigen::MatrixXd p(1, 1);
  p << 0.5;
  Eigen::VectorXi Y(1), n(1);
  Y << 1;
  n << 2;
  CHECK(lppl_for_subject(p, Y, n) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-15));

  // identical draws collapse to the single-draw value
  Eigen::MatrixXd p5(5, 1);
  p5.setConstant(0.5);
  CHECK(lppl_for_subject(p5, Y, n) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-14));

  CHECK_THROWS_AS(lppl_for_subject(Eigen::MatrixXd(0, 1), Y, n), input_error);
}

TEST_CASE("lppl_for_subject matches an extended-precision direct average") {
  Rng rng(86);
  const int T = 100, J = 2;
  Eigen::MatrixXd p(T, J);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) p(t, j) = 0.05 + 0.9 * rng.uniform();
  Eigen::VectorXi Y(J), n(J);
  Y << 13, 2;
  n << 48, 24;

  long double acc = 0;
  for (int t = 0; t < T; ++t) {
    long double prod = 1;
    for (int j = 0; j < J; ++j)
      prod *= std::exp(static_cast<long double>(
          binomial_logpmf(Y[j], n[j], p(t, j))));
    acc += prod;
  }
  double want = static_cast<double>(std::log(acc / T));
  CHECK(std::abs(lppl_for_subject(p, Y, n) - want) < 1e-9);

  // order invariance
  Eigen::MatrixXd perm = p.colwise().reverse();
  CHECK(std::abs(lppl_for_subject(perm, Y, n) - lppl_for_subject(p, Y, n)) < 1e-12);
}

TEST_CASE("quantile_ecdf: point mass, uniform grid, uniform draws") {
  EcdfResult one = quantile_ecdf({0.5});
  CHECK(one.ks == doctest::Approx(0.5).epsilon(1e-14));

  const int m = 99;
  std::vector<double> grid;
  for (int k = 1; k <= m; ++k) grid.push_back(double(k) / (m + 1));
  CHECK(quantile_ecdf(grid).ks <= 1.0 / (m + 1) + 1e-12);

  Rng rng(87);
  std::vector<double> u(10000);
  for (auto& x : u) x = rng.uniform();
  CHECK(quantile_ecdf(u).ks < 0.02);

  CHECK_THROWS_AS(quantile_ecdf({}), input_error);
}

TEST_CASE("make_folds: permutation split invariants") {
  auto folds = make_folds(7, 10, 3);
  REQUIRE(folds.size() == 3);
  std::vector<int> all;
  for (const auto& f : folds) all.insert(all.end(), f.begin(), f.end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 10; ++i) CHECK(all[i] == i);  // exact partition
  CHECK(folds[0].size() == 4);
  CHECK(folds[1].size() == 3);
  CHECK(folds[2].size() == 3);

  auto again = make_folds(7, 10, 3);
  CHECK(folds == again);  // seeded determinism
  auto loo = make_folds(7, 3, 3);
  for (const auto& f : loo) CHECK(f.size() == 1);  // K = I: leave-one-out

  CHECK_THROWS_AS(make_folds(7, 3, 4), input_error);
  CHECK_THROWS_AS(make_folds(7, 3, 1), input_error);
}

TEST_CASE("cross_validate: leave-one-out toy run is deterministic") {
  Rng rng(88);
  Dataset data = tiny_prior_data(rng, 3, 2, 1, 3);
  ModelConfig model;
  model.H = 3;
  model.coef = CoefStructure::none;
  model.error = ErrorStructure::none;
  ChainConfig chain;
  chain.iterations = 40;
  chain.burn_in = 20;

  CvReport a = cross_validate(11, model, chain, data, 3);
  CvReport b = cross_validate(11, model, chain, data, 3);
  CHECK(a.lppl_total == b.lppl_total);
  CHECK(a.subject_lppl.sum() == doctest::Approx(a.lppl_total).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) {
    CHECK(std::isfinite(a.subject_lppl[i]));
    CHECK(a.fold_of_subject[i] == b.fold_of_subject[i]);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(a.phi(i, j) >= 0.0);
      CHECK(a.phi(i, j) <= 1.0);
      CHECK(a.phi(i, j) == b.phi(i, j));
    }
}

TEST_CASE("cross_validate: fold parallelism does not change results") {
  Rng rng(89);
  Dataset data = tiny_prior_data(rng, 8, 2, 1, 3);
  ModelConfig model;
  model.H = 3;
  model.coef = CoefStructure::low_rank;
  model.rank = 1;
  ChainConfig chain;
  chain.iterations = 30;
  chain.burn_in = 10;

  CvOptions serial, parallel;
  parallel.jobs = 4;
  CvReport a = cross_validate(13, model, chain, data, 4, serial);
  CvReport b = cross_validate(13, model, chain, data, 4, parallel);
  CHECK(a.lppl_total == b.lppl_total);
  CHECK((a.phi - b.phi).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("randomized PIT fills tie mass with uniforms") {
  Rng rng(90);
  Dataset data = tiny_prior_data(rng, 6, 1, 1, 3);
  // all-zero trial counts make every predictive draw tie at y = 0
  data.n.setZero();
  data.Y.setZero();
  ModelConfig model;
  model.H = 3;
  model.coef = CoefStructure::none;
  ChainConfig chain;
  chain.iterations = 30;
  chain.burn_in = 10;

  CvReport strict = cross_validate(17, model, chain, data, 3);
  for (int i = 0; i < 6; ++i) CHECK(strict.phi(i, 0) == 0.0);  // P(Ytilde > 0) = 0

  CvOptions opt;
  opt.randomized_pit = true;
  CvReport rpit = cross_validate(17, model, chain, data, 3, opt);
  for (int i = 0; i < 6; ++i) {
    CHECK(rpit.phi(i, 0) > 0.0);  // a uniform share of the full tie mass
    CHECK(rpit.phi(i, 0) < 1.0);
  }
}

TEST_CASE("predict_profile: histogram normalization and quantile order") {
  Rng rng(91);
  Dataset data = tiny_prior_data(rng, 6, 2, 2, 4);
  ModelConfig model;
  model.H = 4;
  model.coef = CoefStructure::low_rank;
  model.rank = 1;
  ChainConfig chain;
  chain.iterations = 50;
  chain.burn_in = 20;
  DrawStore store = run_chain(chain, model, data);

  Rng prng(92);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  Eigen::VectorXi n(2);
  n << 10, 0;
  ProfilePrediction pred = predict_profile(prng, store, x, n);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(pred.y_hist[j].sum() - 1.0) < 1e-12);
    CHECK(pred.p_quantiles(j, 0) <= pred.p_quantiles(j, 1));
    CHECK(pred.p_quantiles(j, 1) <= pred.p_quantiles(j, 2));
  }
  CHECK(pred.y_hist[1][0] == 1.0);  // n = 0: point mass at zero

  Eigen::VectorXd bad = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(predict_profile(prng, store, bad, n), input_error);
}
