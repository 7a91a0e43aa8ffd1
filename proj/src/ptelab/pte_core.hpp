#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ptelab/matstat.hpp"

namespace ptelab::pte {

using matstat::SymPdMatrix;

// Asymptotic joint-law parameters of the estimation triple: covariance
// blocks (sigma, gamma, omega) of the auxiliary and central sequences plus
// the representation matrices (a, b, c) of the unconstrained estimator, the
// constrained estimator, and the pretest statistic.
struct UlanJointLaw {
  int p = 0;
  Eigen::MatrixXd sigma;  // p x p PSD
  Eigen::MatrixXd gamma;  // p x p PD
  Eigen::MatrixXd omega;  // p x p
  Eigen::MatrixXd a;      // p x p
  Eigen::MatrixXd b;      // r x p
  Eigen::MatrixXd c;      // p x p
};

// Throws domain_error unless dimensions agree, gamma is PD, sigma is PSD,
// and the side conditions on c hold within 1e-8:
//   sigma c' c sigma c' c sigma = sigma c' c sigma,  tr[c' c sigma] = p - r.
void validate_law(const UlanJointLaw& law);

// The efficient specialization: a = gamma^{-1}, b = (ups' gamma ups)^{-1} ups',
// c = (I - gamma^{1/2} ups (ups' gamma ups)^{-1} ups' gamma^{1/2}) gamma^{-1/2},
// sigma = omega = gamma.
UlanJointLaw efficient_law(const SymPdMatrix& gamma,
                           const Eigen::MatrixXd& upsilon);

// Linear constraint: parameter restricted to the span of upsilon (p x r,
// full column rank, r < p).
struct ConstraintSpec {
  Eigen::MatrixXd upsilon;
  int r = 0;
  explicit ConstraintSpec(Eigen::MatrixXd u);
};

// Everything that pins down the limit behavior of the efficient pretest
// estimator: information, constraint, local perturbation, test level.
struct EfficientCase {
  SymPdMatrix gamma;
  Eigen::MatrixXd upsilon;
  Eigen::VectorXd tau;
  double alpha;
};

struct ConditionalMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct MeanVar {
  Eigen::VectorXd mean;
  Eigen::MatrixXd var;
};

// Pretest combination: the constrained estimate when q <= threshold (ties
// included), the unconstrained one otherwise.
Eigen::VectorXd pte_combine(const Eigen::VectorXd& theta_u,
                            const Eigen::VectorXd& theta_c, double q,
                            double threshold);

// Conditional limit moments of the pretest estimator given the test
// statistic's limit D = d.
ConditionalMoments conditional_moments(const UlanJointLaw& law,
                                       const ConstraintSpec& spec,
                                       const Eigen::VectorXd& tau,
                                       const Eigen::VectorXd& d,
                                       double threshold);

// Unconditional mean and variance of the conditional-mean vector in the
// efficient case (closed forms in the acceptance probabilities).
MeanVar limit_mean_var(const EfficientCase& c);

// Asymptotic mean-square-error matrices.
Eigen::MatrixXd amse_pte(const EfficientCase& c);
Eigen::MatrixXd amse_u(const SymPdMatrix& gamma);
Eigen::MatrixXd amse_c(const SymPdMatrix& gamma,
                       const Eigen::MatrixXd& upsilon,
                       const Eigen::VectorXd& tau);

// delta = P_perp gamma^{1/2} tau; its squared norm is the noncentrality that
// feeds the acceptance probabilities.
Eigen::VectorXd delta_vec(const SymPdMatrix& gamma,
                          const Eigen::MatrixXd& upsilon,
                          const Eigen::VectorXd& tau);

// Information-weighted scalar risk tr[gamma^{1/2} amse gamma^{1/2}].
double amse_scalar(const SymPdMatrix& gamma, const Eigen::MatrixXd& amse);

// Scalar risk of the pretest estimator: p - g2 (p - r) + (2 g2 - g4) delta_sq.
double amse_scalar_pte_closed(int p, int r, double alpha, double delta_sq);

// Draws from the unconditional limit law, sampled hierarchically: first the
// test-statistic limit D from Normal(c omega tau, c sigma c'), then the
// estimator limit given D. Deterministic in the seed.
std::vector<Eigen::VectorXd> sample_limit_law(const UlanJointLaw& law,
                                              const ConstraintSpec& spec,
                                              const Eigen::VectorXd& tau,
                                              double threshold,
                                              std::int64_t n_draws,
                                              std::uint64_t seed);

}  // namespace ptelab::pte
