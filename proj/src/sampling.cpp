#include "tensorstick/sampling.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace tensorstick {

std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string hex_u64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double std_normal_cdf(double x) {
  if (!std::isfinite(x)) throw input_error("std_normal_cdf: non-finite argument");
  return 0.5 * std::erfc(-x * M_SQRT1_2);
}

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double std_normal_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Acklam's piecewise rational approximation to the probit function.
double acklam_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - plow) {
    double q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

}  // namespace

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw input_error("std_normal_quantile: p must lie in (0,1)");
  double x = acklam_quantile(p);
  // One Halley step; pdf underflows only past |x| ~ 38.5, where the raw
  // approximation is already at the limit of double-representable p.
  double pdf = std_normal_pdf(x);
  if (pdf > 0) {
    double e = std_normal_cdf(x) - p;
    double u = e / pdf;
    x -= u / (1 + 0.5 * x * u);
  }
  return x;
}

double Rng::std_normal() {
  // Box-Muller, cosine branch only; keeps the per-call stream consumption
  // fixed at two uniforms.
  double u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::normal(double mean, double var) {
  if (!(var >= 0)) throw input_error("normal: negative variance");
  return mean + std::sqrt(var) * std_normal();
}

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0) || !(scale > 0))
    throw input_error("gamma: shape and scale must be positive");
  if (shape < 1.0) {
    // Boost: X_{a+1} * U^{1/a} ~ Gamma(a).
    double u = uniform();
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = std_normal();
    double t = 1.0 + c * x;
    if (t <= 0) continue;
    double vv = t * t * t;
    double u = uniform();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * vv * scale;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - vv + std::log(vv))) return d * vv * scale;
  }
}

double Rng::sample_beta(double a, double b) {
  if (!(a > 0) || !(b > 0)) throw input_error("sample_beta: a,b must be positive");
  double x = gamma(a, 1.0);
  double y = gamma(b, 1.0);
  double s = x + y;
  if (s <= 0) return 0.5;  // both gammas underflowed; only reachable for tiny a,b
  return x / s;
}

double Rng::sample_inverse_gamma(double shape, double rate) {
  if (!(shape > 0) || !(rate > 0))
    throw input_error("sample_inverse_gamma: shape and rate must be positive");
  return 1.0 / gamma(shape, 1.0 / rate);
}

int Rng::sample_binomial(int n, double p) {
  if (n < 0) throw input_error("sample_binomial: negative trial count");
  if (!(p >= 0.0 && p <= 1.0)) throw input_error("sample_binomial: p outside [0,1]");
  if (p == 0.0) return 0;
  if (p == 1.0) return n;
  int k = 0;
  for (int t = 0; t < n; ++t) k += (uniform() < p) ? 1 : 0;
  return k;
}

double Rng::sample_trunc_std_normal(double mean, TruncSide side) {
  if (!std::isfinite(mean))
    throw numeric_error("sample_trunc_std_normal: non-finite mean");
  if (side == TruncSide::negative)
    return -sample_trunc_std_normal(-mean, TruncSide::positive);
  // Draw xi ~ N(0,1) | xi > a with a = -mean, return mean + xi > 0.
  const double a = -mean;
  double xi;
  do {
    if (a <= 5.0) {
      // Upper-tail inversion: P(xi > t | xi > a) = Phi(-t)/Phi(-a). The
      // complementary CDF keeps full relative precision here, unlike
      // inverting near 1.
      double q = std_normal_cdf(-a);
      double u = uniform();
      xi = -std_normal_quantile(u * q);
    } else {
      // Robert (1995) shifted-exponential rejection for the far tail.
      const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
      for (;;) {
        double e = -std::log(uniform()) / lambda;
        double x = a + e;
        double diff = x - lambda;
        if (std::log(uniform()) <= -0.5 * diff * diff) {
          xi = x;
          break;
        }
      }
    }
  } while (!(mean + xi > 0.0));  // guard the strict sign contract against rounding
  return mean + xi;
}

int Rng::sample_categorical_log(const Eigen::VectorXd& logw) {
  const long H = logw.size();
  if (H == 0) throw input_error("sample_categorical_log: empty weight vector");
  double m = -std::numeric_limits<double>::infinity();
  for (long h = 0; h < H; ++h) {
    if (std::isnan(logw[h]))
      throw numeric_error("sample_categorical_log: NaN log-weight");
    if (logw[h] > m) m = logw[h];
  }
  if (!std::isfinite(m))
    throw numeric_error("sample_categorical_log: all weights degenerate (-inf)");
  double total = 0;
  for (long h = 0; h < H; ++h) total += std::exp(logw[h] - m);
  double u = uniform() * total;
  double acc = 0;
  for (long h = 0; h < H; ++h) {
    acc += std::exp(logw[h] - m);
    if (u <= acc) return static_cast<int>(h);
  }
  return static_cast<int>(H - 1);
}

Eigen::VectorXd GaussianPosterior::sample(Rng& rng) const {
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw invariant_error("GaussianPosterior: covariance not positive definite");
  Eigen::VectorXd xi(mean.size());
  for (long i = 0; i < xi.size(); ++i) xi[i] = rng.std_normal();
  return mean + llt.matrixL() * xi;
}

GaussianPosterior gaussian_linear_update(const Eigen::MatrixXd& W,
                                         const Eigen::VectorXd& z,
                                         const Eigen::VectorXd& prior_prec) {
  const long q = prior_prec.size();
  if (W.rows() != z.size())
    throw input_error("gaussian_linear_update: W rows and z length differ");
  if (W.rows() > 0 && W.cols() != q)
    throw input_error("gaussian_linear_update: W cols and prior size differ");
  if ((prior_prec.array() <= 0).any())
    throw input_error("gaussian_linear_update: prior precision must be positive");

  Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(q, q);
  if (W.rows() > 0) prec = W.transpose() * W;
  prec.diagonal() += prior_prec;

  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw invariant_error("gaussian_linear_update: system not positive definite");

  GaussianPosterior post;
  post.covariance = llt.solve(Eigen::MatrixXd::Identity(q, q));
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();
  if (W.rows() > 0)
    post.mean = llt.solve(W.transpose() * z);
  else
    post.mean = Eigen::VectorXd::Zero(q);
  return post;
}

}  // namespace tensorstick
