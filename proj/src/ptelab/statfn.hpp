#pragma once

namespace ptelab::statfn {

// Inputs for the pretest acceptance probabilities gamma_j. The probability is
// taken under a noncentral chi-square law whose degrees of freedom carry an
// even offset j on top of p - r.
struct GammaJInputs {
  int j;            // even df offset, 2 or 4 in practice
  int p;            // parameter dimension
  int r;            // constrained dimension, r < p
  double alpha;     // test level in [0,1]
  double delta_sq;  // noncentrality, >= 0
};

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

double chi2_pdf(double x, double df);
double chi2_cdf(double x, double df);

// Inverse of chi2_cdf in x: chi2_cdf(result, df) = prob within 1e-10.
double chi2_quantile(double prob, double df);

double noncentral_chi2_cdf(double x, double df, double lambda);

// Critical value of the level-alpha pretest with p - r degrees of freedom.
// alpha = 0 gives +infinity (never reject), alpha = 1 gives 0 (always reject);
// both bypass the quantile solve.
double pte_threshold(int p, int r, double alpha);

double gamma_j(const GammaJInputs& in);

}  // namespace ptelab::statfn
