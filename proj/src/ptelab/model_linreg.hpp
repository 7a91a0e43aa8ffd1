#pragma once

#include <Eigen/Dense>

namespace ptelab::linreg {

// Design for a simple linear regression y = rho*1 + beta*x + noise with
// known error variance and a hypothesized slope. The spread s_x may be zero
// at construction; operations that divide by it reject that case.
class LinRegDesign {
 public:
  LinRegDesign(Eigen::VectorXd x, double sigma_sq, double beta0);

  const Eigen::VectorXd& x() const { return x_; }
  double sigma_sq() const { return sigma_sq_; }
  double beta0() const { return beta0_; }
  Eigen::Index n() const { return x_.size(); }
  double x_bar() const { return x_bar_; }
  double s_x() const { return s_x_; }

 private:
  Eigen::VectorXd x_;
  double sigma_sq_;
  double beta0_;
  double x_bar_;
  double s_x_;
};

struct LinRegFit {
  double rho;
  double beta;
};

LinRegFit fit_unconstrained(const Eigen::VectorXd& y,
                            const LinRegDesign& design);

// Slope pinned at the hypothesized value; intercept refit around it.
LinRegFit fit_constrained(const Eigen::VectorXd& y,
                          const LinRegDesign& design);

// n * (beta_hat - beta0)^2 * s_x / sigma^2, compared against the df-1 cutoff.
double wald_stat(double beta_hat, const LinRegDesign& design, long n);

// Per-observation information for (intercept, slope):
//   (1/sigma^2) [[1, xb], [xb, s0 + xb^2]]
Eigen::Matrix2d information_matrix(double x_bar0, double s0, double sigma_sq);

// Pointwise risk matrix of the pretest estimator for a slope perturbation
// delta at level alpha, written directly in (sigma^2, x_bar0, s0) terms.
// Independent of the projection-based route; the two must agree.
Eigen::Matrix2d amse_pte_linreg(double sigma_sq, double x_bar0, double s0,
                                double delta, double alpha);

}  // namespace ptelab::linreg
