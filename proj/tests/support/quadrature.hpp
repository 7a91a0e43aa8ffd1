#pragma once

// Reference integrators for the distribution-function tests. Everything here
// is deliberately independent of the library's incomplete-gamma code path:
// the chi-square CDF is obtained by adaptive quadrature of the density and
// quantiles by plain bisection on that quadrature.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracle {

inline double adaptive_simpson_(const std::function<double(double)>& f,
                                double a, double b, double fa, double fb,
                                double fm, double whole, double tol,
                                int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw std::runtime_error("adaptive simpson: depth exhausted");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-13) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_(f, a, b, fa, fb, fm, whole, tol, 60);
}

// Chi-square CDF by quadrature. Substituting x = u^2 removes the endpoint
// singularity for df < 2: the transformed density is 2 u^{df-1} e^{-u^2/2} /
// (2^{df/2} Gamma(df/2)), smooth on [0, inf) for df >= 1.
inline double chi2_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  const double lognorm =
      0.5 * df * std::log(2.0) + std::lgamma(0.5 * df);
  auto g = [&](double u) {
    if (u == 0.0) return (df == 1.0) ? 2.0 * std::exp(-lognorm) : 0.0;
    return 2.0 * std::exp((df - 1.0) * std::log(u) - 0.5 * u * u - lognorm);
  };
  return integrate(g, 0.0, std::sqrt(x));
}

inline double chi2_quantile(double prob, double df) {
  double lo = 0.0, hi = 1.0;
  while (chi2_cdf(hi, df) < prob) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    if (chi2_cdf(m, df) < prob) {
      lo = m;
    } else {
      hi = m;
    }
  }
  return 0.5 * (lo + hi);
}

// Noncentral CDF as an explicit Poisson mixture over the quadrature CDF.
// Shares only the mixture identity with the production code, not its
// incomplete-gamma evaluation.
inline double noncentral_chi2_cdf(double x, double df, double lambda) {
  if (x <= 0.0) return 0.0;
  const double half = 0.5 * lambda;
  double sum = 0.0;
  double mass = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double logw = -half + i * std::log(half) - std::lgamma(i + 1.0);
    const double w = std::exp(logw);
    sum += w * chi2_cdf(x, df + 2.0 * i);
    mass += w;
    if (mass > 1.0 - 1e-13 && i > 2 * half) return sum;
  }
  return sum;
}

}  // namespace oracle
