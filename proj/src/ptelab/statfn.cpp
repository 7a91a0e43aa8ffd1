#include "ptelab/statfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ptelab/errors.hpp"

namespace ptelab::statfn {

namespace {

constexpr int kMaxIter = 5000;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kFpMin = std::numeric_limits<double>::min() / kEps;

// Series expansion of P(a,x); converges fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw numeric_error("incomplete gamma series did not converge");
}

// Continued fraction for Q(a,x) = 1 - P(a,x), modified Lentz; for x >= a + 1.
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) {
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw numeric_error("incomplete gamma continued fraction did not converge");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a) || !std::isfinite(x)) {
    throw domain_error("regularized_gamma_p: need a > 0 and finite x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi2_pdf(double x, double df) {
  if (!(df > 0.0) || !(x >= 0.0)) {
    throw domain_error("chi2_pdf: need x >= 0 and df > 0");
  }
  if (x == 0.0) {
    if (df > 2.0) return 0.0;
    if (df == 2.0) return 0.5;
    return std::numeric_limits<double>::infinity();
  }
  const double h = 0.5 * df;
  return std::exp((h - 1.0) * std::log(x) - 0.5 * x - std::lgamma(h) -
                  h * 0.6931471805599453094172321);
}

double chi2_cdf(double x, double df) {
  if (!(x >= 0.0) || !std::isfinite(df) || !(df > 0.0)) {
    throw domain_error("chi2_cdf: need x >= 0 and df > 0");
  }
  if (std::isinf(x)) return 1.0;
  return regularized_gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(double prob, double df) {
  if (!(prob > 0.0) || !(prob < 1.0)) {
    throw domain_error("chi2_quantile: need prob in (0,1)");
  }
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw domain_error("chi2_quantile: need df > 0");
  }

  double lo = 0.0;
  double hi = df + 10.0 * std::sqrt(2.0 * df) + 10.0;
  while (chi2_cdf(hi, df) < prob) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw numeric_error("chi2_quantile: bracket blew up");
  }

  // Bisection-safeguarded Newton, iterated until the step stalls so that the
  // inversion error is limited by the representation of prob, not by an early
  // CDF-scale cutoff.
  double x = 0.5 * (lo + hi);
  double f = chi2_cdf(x, df) - prob;
  for (int it = 0; it < 300 && f != 0.0; ++it) {
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double dens = (x > 0.0) ? chi2_pdf(x, df) : 0.0;
    double xn = (dens > 0.0 && std::isfinite(dens)) ? x - f / dens : x;
    if (!(xn > lo) || !(xn < hi)) xn = 0.5 * (lo + hi);
    if (xn == x || !(hi - lo > 1e-15 * x)) break;
    x = xn;
    f = chi2_cdf(x, df) - prob;
  }
  if (std::abs(f) > 1e-10) {
    throw numeric_error("chi2_quantile: solver stalled at |cdf-prob| = " +
                        std::to_string(std::abs(f)));
  }
  return x;
}

double noncentral_chi2_cdf(double x, double df, double lambda) {
  if (!(x >= 0.0) || !(df > 0.0) || !(lambda >= 0.0) || !std::isfinite(df) ||
      !std::isfinite(lambda)) {
    throw domain_error(
        "noncentral_chi2_cdf: need x >= 0, df > 0, lambda >= 0");
  }
  if (lambda == 0.0) return chi2_cdf(x, df);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;

  // Poisson mixture over chi2_cdf(x, df + 2i), summed outward from the mode
  // of the weights. Every term is <= 1, so once the accumulated Poisson mass
  // exceeds 1 - 1e-12 the remainder of the series is below 1e-12.
  const double half = 0.5 * lambda;
  const long mode = static_cast<long>(std::floor(half));
  const double logw0 =
      -half + static_cast<double>(mode) * std::log(half) - std::lgamma(static_cast<double>(mode) + 1.0);
  const double w0 = std::exp(logw0);

  double sum = w0 * chi2_cdf(x, df + 2.0 * static_cast<double>(mode));
  double mass = w0;

  double wup = w0;
  double wdown = w0;
  long iup = mode;
  long idown = mode;
  for (int it = 0; it < 200000; ++it) {
    if (mass > 1.0 - 1e-12) {
      return std::clamp(sum, 0.0, 1.0);
    }
    if (idown > 0) {
      wdown *= static_cast<double>(idown) / half;
      --idown;
      sum += wdown * chi2_cdf(x, df + 2.0 * static_cast<double>(idown));
      mass += wdown;
    }
    ++iup;
    wup *= half / static_cast<double>(iup);
    sum += wup * chi2_cdf(x, df + 2.0 * static_cast<double>(iup));
    mass += wup;
  }
  throw numeric_error("noncentral_chi2_cdf: series did not converge");
}

double pte_threshold(int p, int r, double alpha) {
  if (!(r >= 1) || !(r < p)) {
    throw domain_error("pte_threshold: need 1 <= r < p");
  }
  if (!(alpha >= 0.0) || !(alpha <= 1.0)) {
    throw domain_error("pte_threshold: need alpha in [0,1]");
  }
  if (alpha == 0.0) return std::numeric_limits<double>::infinity();
  if (alpha == 1.0) return 0.0;
  return chi2_quantile(1.0 - alpha, static_cast<double>(p - r));
}

double gamma_j(const GammaJInputs& in) {
  if (!(in.j > 0) || (in.j % 2) != 0) {
    throw domain_error("gamma_j: j must be a positive even offset");
  }
  if (!(in.r >= 1) || !(in.r < in.p)) {
    throw domain_error("gamma_j: need 1 <= r < p");
  }
  if (!(in.alpha >= 0.0) || !(in.alpha <= 1.0)) {
    throw domain_error("gamma_j: need alpha in [0,1]");
  }
  if (!(in.delta_sq >= 0.0) || !std::isfinite(in.delta_sq)) {
    throw domain_error("gamma_j: need finite delta_sq >= 0");
  }
  if (in.alpha == 1.0) return 0.0;
  if (in.alpha == 0.0) return 1.0;
  const double t = pte_threshold(in.p, in.r, in.alpha);
  return noncentral_chi2_cdf(t, static_cast<double>(in.p - in.r + in.j),
                             in.delta_sq);
}

}  // namespace ptelab::statfn
