#include "tensorstick/model.hpp"

#include <cmath>
#include <limits>

namespace tensorstick {

std::string to_string(CoefStructure s) {
  switch (s) {
    case CoefStructure::none: return "none";
    case CoefStructure::shared_types: return "shared_types";
    case CoefStructure::full: return "full";
    case CoefStructure::low_rank: return "low_rank";
  }
  return "?";
}

std::string to_string(ErrorStructure s) {
  return s == ErrorStructure::none ? "none" : "low_rank";
}

CoefStructure coef_structure_from_string(const std::string& s) {
  if (s == "none") return CoefStructure::none;
  if (s == "shared_types" || s == "shared") return CoefStructure::shared_types;
  if (s == "full") return CoefStructure::full;
  if (s == "low_rank" || s == "lowrank") return CoefStructure::low_rank;
  throw input_error("unknown coefficient structure '" + s + "'");
}

ErrorStructure error_structure_from_string(const std::string& s) {
  if (s == "none") return ErrorStructure::none;
  if (s == "low_rank" || s == "lowrank") return ErrorStructure::low_rank;
  throw input_error("unknown error structure '" + s + "'");
}

void ModelConfig::validate() const {
  if (H < 2) throw input_error("ModelConfig: truncation level H must be >= 2");
  if (coef == CoefStructure::low_rank && rank < 1)
    throw input_error("ModelConfig: coefficient rank must be >= 1");
  if (error == ErrorStructure::low_rank && error_rank < 1)
    throw input_error("ModelConfig: error rank must be >= 1");
  if (!(beta_a > 0) || !(beta_b > 0))
    throw input_error("ModelConfig: Beta base parameters must be positive");
  if (!(ig_shape > 0) || !(ig_rate > 0))
    throw input_error("ModelConfig: inverse-gamma hyperparameters must be positive");
}

std::uint64_t ModelConfig::hash() const {
  std::string s = "H=" + std::to_string(H) + ";coef=" + to_string(coef) +
                  ";R=" + std::to_string(rank) + ";err=" + to_string(error) +
                  ";Re=" + std::to_string(error_rank) + ";a=" + fmt_g17(beta_a) +
                  ";b=" + fmt_g17(beta_b) + ";igs=" + fmt_g17(ig_shape) +
                  ";igr=" + fmt_g17(ig_rate);
  return fnv1a64(s);
}

Array3 coef_term(const CoefBlock& coef, const Eigen::MatrixXd& X, int J, int H) {
  const int I = static_cast<int>(X.rows());
  switch (coef.kind) {
    case CoefStructure::none:
      return Array3(I, J, H);
    case CoefStructure::shared_types: {
      Array3 out(I, J, H);
      Eigen::MatrixXd XB = X * coef.shared;  // I x H
      for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
          for (int h = 0; h < H; ++h) out(i, j, h) = XB(i, h);
      return out;
    }
    case CoefStructure::full:
      return contract_mode1(X, coef.dense);
    case CoefStructure::low_rank: {
      // X B1 collapses the covariate mode; the rest is a CP compose.
      CpFactors proj{X * coef.cp.F1, coef.cp.F2, coef.cp.F3};
      return cp_compose(proj);
    }
  }
  throw invariant_error("coef_term: unreachable");
}

Array3 error_term(const ErrorBlock& err, int I, int J, int H) {
  if (!err.present()) return Array3(I, J, H);
  return cp_compose(err.cp);
}

Array3 linear_predictor(const ParamState& state, const Eigen::MatrixXd& X) {
  const int I = static_cast<int>(X.rows());
  const int J = static_cast<int>(state.Zjh.rows());
  const int H = state.H();
  Array3 lin = coef_term(state.coef, X, J, H);
  if (state.err.present()) lin.v += error_term(state.err, I, J, H).v;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      for (int h = 0; h < H; ++h) lin(i, j, h) += state.Zjh(j, h);
  return lin;
}

StickWeights compute_sticks(const ParamState& state, const Eigen::MatrixXd& X) {
  const int I = static_cast<int>(X.rows());
  const int J = static_cast<int>(state.Zjh.rows());
  const int H = state.H();
  Array3 lin = linear_predictor(state, X);
  if (!lin.all_finite())
    throw numeric_error("compute_sticks: non-finite linear predictor");

  StickWeights w{Array3(I, J, H), Array3(I, J, H)};
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      double remaining = 1.0;
      for (int h = 0; h < H; ++h) {
        double vh = (h == H - 1) ? 1.0 : std_normal_cdf(lin(i, j, h));
        w.V(i, j, h) = vh;
        w.pi(i, j, h) = vh * remaining;
        remaining *= (1.0 - vh);
      }
    }
  return w;
}

double binomial_logpmf(int y, int n, double p) {
  if (n < 0 || y < 0 || y > n)
    throw input_error("binomial_logpmf: require 0 <= y <= n");
  if (!(p >= 0.0 && p <= 1.0))
    throw input_error("binomial_logpmf: p outside [0,1]");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (p == 0.0) return y == 0 ? 0.0 : neg_inf;
  if (p == 1.0) return y == n ? 0.0 : neg_inf;
  double logc = std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0);
  return logc + y * std::log(p) + (n - y) * std::log1p(-p);
}

double loglik(const ParamState& state, const Dataset& data) {
  double total = 0;
  for (int i = 0; i < data.I(); ++i)
    for (int j = 0; j < data.J(); ++j)
      total += binomial_logpmf(data.Y(i, j), data.n(i, j), state.theta[state.C(i, j)]);
  return total;
}

namespace {

void fill_normal(Rng& rng, Eigen::MatrixXd& m, double sd = 1.0) {
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) m(i, j) = sd * rng.std_normal();
}

}  // namespace

std::pair<ParamState, Dataset> prior_generative_draw(Rng& rng,
                                                     const ModelConfig& config,
                                                     const Eigen::MatrixXd& X,
                                                     const Eigen::MatrixXi& n) {
  config.validate();
  const int I = static_cast<int>(X.rows());
  const int J = static_cast<int>(n.cols());
  const int D = static_cast<int>(X.cols());
  const int H = config.H;
  if (n.rows() != I) throw input_error("prior_generative_draw: X and n rows differ");

  ParamState st;
  st.alpha = rng.std_normal();
  st.Zjh.resize(J, H);
  for (int j = 0; j < J; ++j)
    for (int h = 0; h < H; ++h) st.Zjh(j, h) = st.alpha + rng.std_normal();

  st.coef.kind = config.coef;
  switch (config.coef) {
    case CoefStructure::none:
      break;
    case CoefStructure::shared_types:
      st.coef.shared.resize(D, H);
      fill_normal(rng, st.coef.shared);
      break;
    case CoefStructure::full: {
      st.coef.dense = Array3(D, J, H);
      for (long k = 0; k < st.coef.dense.v.size(); ++k)
        st.coef.dense.v[k] = rng.std_normal();
      break;
    }
    case CoefStructure::low_rank: {
      st.coef.cp.F1.resize(D, config.rank);
      st.coef.cp.F2.resize(J, config.rank);
      st.coef.cp.F3.resize(H, config.rank);
      fill_normal(rng, st.coef.cp.F1);
      fill_normal(rng, st.coef.cp.F2);
      fill_normal(rng, st.coef.cp.F3);
      break;
    }
  }

  st.err.kind = config.error;
  if (config.error == ErrorStructure::low_rank) {
    const int Re = config.error_rank;
    st.sigma2.resize(Re);
    for (int r = 0; r < Re; ++r)
      st.sigma2[r] = rng.sample_inverse_gamma(config.ig_shape, config.ig_rate);
    st.err.cp.F1.resize(I, Re);
    for (int r = 0; r < Re; ++r) {
      double sd = std::sqrt(st.sigma2[r]);
      for (int i = 0; i < I; ++i) st.err.cp.F1(i, r) = sd * rng.std_normal();
    }
    st.err.cp.F2.resize(J, Re);
    st.err.cp.F3.resize(H, Re);
    fill_normal(rng, st.err.cp.F2);
    fill_normal(rng, st.err.cp.F3);
  }

  st.theta.resize(H);
  for (int h = 0; h < H; ++h)
    st.theta[h] = rng.sample_beta(config.beta_a, config.beta_b);

  StickWeights sticks = compute_sticks(st, X);
  st.C.resize(I, J);
  st.Zstar = Array3(I, J, H);

  Dataset data;
  data.X = X;
  data.n = n;
  data.Y.resize(I, J);
  Eigen::VectorXd logw(H);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      for (int h = 0; h < H; ++h) logw[h] = std::log(sticks.pi(i, j, h));
      int h = rng.sample_categorical_log(logw);
      st.C(i, j) = h;
      data.Y(i, j) = rng.sample_binomial(n(i, j), st.theta[h]);
    }

  for (int i = 0; i < I; ++i) data.subjects.push_back("s" + std::to_string(i + 1));
  for (int j = 0; j < J; ++j) data.types.push_back("t" + std::to_string(j + 1));
  for (int d = 0; d < D; ++d)
    data.covariate_names.push_back("x" + std::to_string(d + 1));
  data.x_mean = Eigen::VectorXd::Zero(D);
  data.x_sd = Eigen::VectorXd::Ones(D);
  return {std::move(st), std::move(data)};
}

}  // namespace tensorstick
