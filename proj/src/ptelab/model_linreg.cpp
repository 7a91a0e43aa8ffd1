#include "ptelab/model_linreg.hpp"

#include <cmath>

#include "ptelab/errors.hpp"
#include "ptelab/statfn.hpp"

namespace ptelab::linreg {

namespace {

void require_spread(const LinRegDesign& design) {
  if (!(design.s_x() > 0.0)) {
    throw domain_error("linreg: covariate has zero spread");
  }
}

void require_lengths(const Eigen::VectorXd& y, const LinRegDesign& design) {
  if (y.size() != design.n()) {
    throw domain_error("linreg: response length does not match design");
  }
}

}  // namespace

LinRegDesign::LinRegDesign(Eigen::VectorXd x, double sigma_sq, double beta0)
    : x_(std::move(x)), sigma_sq_(sigma_sq), beta0_(beta0) {
  if (x_.size() < 2) throw domain_error("linreg: need at least two points");
  if (!x_.allFinite() || !std::isfinite(sigma_sq_) || !std::isfinite(beta0_)) {
    throw domain_error("linreg: non-finite design");
  }
  if (!(sigma_sq_ > 0.0)) throw domain_error("linreg: sigma_sq must be > 0");
  const double n = static_cast<double>(x_.size());
  x_bar_ = x_.sum() / n;
  s_x_ = x_.squaredNorm() / n - (x_.sum() / n) * (x_.sum() / n);
  if (s_x_ < 0.0) s_x_ = 0.0;  // rounding guard
}

LinRegFit fit_unconstrained(const Eigen::VectorXd& y,
                            const LinRegDesign& design) {
  require_lengths(y, design);
  require_spread(design);
  const double n = static_cast<double>(design.n());
  const double sum_x = design.x().sum();
  const double sum_y = y.sum();
  const double beta =
      (design.x().dot(y) - sum_x * sum_y / n) / (n * design.s_x());
  const double rho = (sum_y - beta * sum_x) / n;
  return LinRegFit{rho, beta};
}

LinRegFit fit_constrained(const Eigen::VectorXd& y,
                          const LinRegDesign& design) {
  require_lengths(y, design);
  const double n = static_cast<double>(design.n());
  const double rho = (y.sum() - design.beta0() * design.x().sum()) / n;
  return LinRegFit{rho, design.beta0()};
}

double wald_stat(double beta_hat, const LinRegDesign& design, long n) {
  require_spread(design);
  if (n <= 0) throw domain_error("linreg: n must be positive");
  const double diff = beta_hat - design.beta0();
  return static_cast<double>(n) * diff * diff * design.s_x() /
         design.sigma_sq();
}

Eigen::Matrix2d information_matrix(double x_bar0, double s0, double sigma_sq) {
  if (!(s0 > 0.0)) throw domain_error("linreg: s0 must be > 0");
  if (!(sigma_sq > 0.0)) throw domain_error("linreg: sigma_sq must be > 0");
  if (!std::isfinite(x_bar0) || !std::isfinite(s0) || !std::isfinite(sigma_sq)) {
    throw domain_error("linreg: non-finite information inputs");
  }
  Eigen::Matrix2d g;
  g << 1.0, x_bar0, x_bar0, s0 + x_bar0 * x_bar0;
  return g / sigma_sq;
}

Eigen::Matrix2d amse_pte_linreg(double sigma_sq, double x_bar0, double s0,
                                double delta, double alpha) {
  if (!(s0 > 0.0)) throw domain_error("linreg: s0 must be > 0");
  if (!(sigma_sq > 0.0)) throw domain_error("linreg: sigma_sq must be > 0");
  if (!std::isfinite(delta)) throw domain_error("linreg: non-finite delta");
  // the slope perturbation separates from the constraint at rate s0/sigma^2
  const double ncp = s0 * delta * delta / sigma_sq;
  const double g2 = statfn::gamma_j(statfn::GammaJInputs{2, 2, 1, alpha, ncp});
  const double g4 = statfn::gamma_j(statfn::GammaJInputs{4, 2, 1, alpha, ncp});
  const double xb2 = x_bar0 * x_bar0;
  const double d2 = delta * delta;
  Eigen::Matrix2d out;
  out(0, 0) = sigma_sq * (1.0 + xb2 / s0 - g2 * xb2 / s0) +
              (2.0 * g2 - g4) * xb2 * d2;
  out(0, 1) = sigma_sq * (g2 - 1.0) * x_bar0 / s0 -
              (2.0 * g2 - g4) * x_bar0 * d2;
  out(1, 0) = out(0, 1);
  out(1, 1) = sigma_sq * (1.0 - g2) / s0 + (2.0 * g2 - g4) * d2;
  return out;
}

}  // namespace ptelab::linreg
