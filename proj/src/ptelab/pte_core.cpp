#include "ptelab/pte_core.hpp"

#include <cmath>
#include <utility>

#include "ptelab/errors.hpp"
#include "ptelab/rng.hpp"
#include "ptelab/statfn.hpp"

namespace ptelab::pte {

namespace {

double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// F with F F' = m (m symmetric PSD), columns spanning the numerically
// nonzero eigenspace.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 *
                                                    (m + m.transpose()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = 1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  int rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cutoff) ++rank;
  }
  Eigen::MatrixXd f(m.rows(), rank);
  int col = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cutoff) {
      f.col(col++) = es.eigenvectors().col(i) * std::sqrt(ev(i));
    }
  }
  return f;
}

struct EffPieces {
  int p;
  int r;
  Eigen::MatrixXd ghalf;      // gamma^{1/2}
  Eigen::MatrixXd ghalf_inv;  // gamma^{-1/2}
  Eigen::MatrixXd p_eff;      // projector onto span(gamma^{1/2} upsilon)
  Eigen::MatrixXd p_perp;
};

EffPieces eff_pieces(const SymPdMatrix& gamma,
                     const Eigen::MatrixXd& upsilon) {
  if (upsilon.rows() != gamma.dim() || upsilon.cols() >= gamma.dim()) {
    throw domain_error("efficient case: need p x r upsilon with r < p");
  }
  EffPieces out;
  out.p = gamma.dim();
  out.r = static_cast<int>(upsilon.cols());
  out.ghalf = matstat::sym_sqrt(gamma).mat();
  out.ghalf_inv = out.ghalf.inverse();
  const matstat::EffProjection ep =
      matstat::efficient_projection(gamma, upsilon);
  out.p_eff = ep.p;
  out.p_perp = ep.p_perp;
  return out;
}

void check_case(const EfficientCase& c) {
  if (c.tau.size() != c.gamma.dim()) {
    throw domain_error("efficient case: tau dimension mismatch");
  }
  if (!(c.alpha >= 0.0) || !(c.alpha <= 1.0)) {
    throw domain_error("efficient case: alpha must lie in [0,1]");
  }
}

}  // namespace

void validate_law(const UlanJointLaw& law) {
  const int p = law.p;
  if (p < 2) throw domain_error("joint law: need p >= 2");
  auto square = [&](const Eigen::MatrixXd& m, const char* name) {
    if (m.rows() != p || m.cols() != p) {
      throw domain_error(std::string("joint law: ") + name + " must be p x p");
    }
  };
  square(law.sigma, "sigma");
  square(law.gamma, "gamma");
  square(law.omega, "omega");
  square(law.a, "a");
  square(law.c, "c");
  if (law.b.cols() != p || law.b.rows() < 1 || law.b.rows() >= p) {
    throw domain_error("joint law: b must be r x p with 1 <= r < p");
  }
  const int r = static_cast<int>(law.b.rows());

  SymPdMatrix gamma_check(law.gamma);  // throws if not PD
  if (max_abs(law.sigma - law.sigma.transpose()) >
      1e-10 * std::max(1.0, max_abs(law.sigma))) {
    throw domain_error("joint law: sigma is not symmetric");
  }
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (law.sigma + law.sigma.transpose()), Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(hi, 1.0)) {
      throw domain_error("joint law: sigma is not positive semidefinite");
    }
  }

  const Eigen::MatrixXd scc = law.sigma * law.c.transpose() * law.c;
  const Eigen::MatrixXd sccs = scc * law.sigma;
  const double scale = std::max(1.0, max_abs(sccs));
  if (max_abs(sccs * law.c.transpose() * law.c * law.sigma - sccs) >
      1e-8 * scale) {
    throw domain_error("joint law: test matrix fails the idempotence-type "
                       "side condition");
  }
  const double tr = (law.c.transpose() * law.c * law.sigma).trace();
  if (std::abs(tr - static_cast<double>(p - r)) > 1e-8) {
    throw domain_error("joint law: tr[c' c sigma] must equal p - r");
  }
}

UlanJointLaw efficient_law(const SymPdMatrix& gamma,
                           const Eigen::MatrixXd& upsilon) {
  const EffPieces ep = eff_pieces(gamma, upsilon);
  UlanJointLaw law;
  law.p = ep.p;
  law.sigma = gamma.mat();
  law.gamma = gamma.mat();
  law.omega = gamma.mat();
  law.a = gamma.mat().inverse();
  const Eigen::MatrixXd ugu = upsilon.transpose() * gamma.mat() * upsilon;
  law.b = ugu.inverse() * upsilon.transpose();
  law.c = ep.p_perp * ep.ghalf_inv;
  return law;
}

ConstraintSpec::ConstraintSpec(Eigen::MatrixXd u) : upsilon(std::move(u)) {
  r = static_cast<int>(upsilon.cols());
  if (r < 1 || upsilon.rows() <= r) {
    throw domain_error("constraint: need p x r upsilon with 1 <= r < p");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(upsilon);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-10 * sv(0))) {
    throw domain_error("constraint: upsilon is rank deficient");
  }
}

Eigen::VectorXd pte_combine(const Eigen::VectorXd& theta_u,
                            const Eigen::VectorXd& theta_c, double q,
                            double threshold) {
  if (!(q >= 0.0)) {
    throw domain_error("pte_combine: test statistic must be >= 0");
  }
  if (theta_u.size() != theta_c.size()) {
    throw domain_error("pte_combine: estimate dimensions differ");
  }
  return (q <= threshold) ? theta_c : theta_u;
}

ConditionalMoments conditional_moments(const UlanJointLaw& law,
                                       const ConstraintSpec& spec,
                                       const Eigen::VectorXd& tau,
                                       const Eigen::VectorXd& d,
                                       double threshold) {
  validate_law(law);
  const int p = law.p;
  if (spec.upsilon.rows() != p || spec.r != law.b.rows()) {
    throw domain_error("conditional_moments: constraint does not match law");
  }
  if (tau.size() != p || d.size() != p) {
    throw domain_error("conditional_moments: vector dimension mismatch");
  }
  const bool accept = d.squaredNorm() <= threshold;

  const Eigen::MatrixXd csc = law.c * law.sigma * law.c.transpose();
  const Eigen::MatrixXd cscinv = matstat::moore_penrose(csc);
  const Eigen::MatrixXd l = law.sigma * law.c.transpose() * cscinv * law.c *
                            law.sigma;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(p, p);

  ConditionalMoments out;
  if (accept) {
    out.mean = (spec.upsilon * law.b * law.omega - id) * tau;
    const Eigen::MatrixXd ub = spec.upsilon * law.b;
    out.cov = ub * (law.sigma - l) * ub.transpose();
  } else {
    out.mean = (law.a * law.omega - id) * tau +
               law.a * law.sigma * law.c.transpose() * cscinv *
                   (d - law.c * law.omega * tau);
    out.cov = law.a * (law.sigma - l) * law.a.transpose();
  }
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

MeanVar limit_mean_var(const EfficientCase& c) {
  check_case(c);
  const EffPieces ep = eff_pieces(c.gamma, c.upsilon);
  const Eigen::VectorXd delta = ep.p_perp * ep.ghalf * c.tau;
  const double d2 = delta.squaredNorm();
  const double g2 = statfn::gamma_j({2, ep.p, ep.r, c.alpha, d2});
  const double g4 = statfn::gamma_j({4, ep.p, ep.r, c.alpha, d2});

  MeanVar out;
  out.mean = -g2 * ep.ghalf_inv * delta;
  const Eigen::VectorXd w = ep.ghalf_inv * delta;
  out.var = (1.0 - g2) * ep.ghalf_inv * ep.p_perp * ep.ghalf_inv +
            ((1.0 - g4) - (1.0 - g2) * (1.0 - g2)) * w * w.transpose();
  out.var = 0.5 * (out.var + out.var.transpose()).eval();
  return out;
}

Eigen::MatrixXd amse_pte(const EfficientCase& c) {
  check_case(c);
  const EffPieces ep = eff_pieces(c.gamma, c.upsilon);
  const Eigen::VectorXd delta = ep.p_perp * ep.ghalf * c.tau;
  const double d2 = delta.squaredNorm();
  const double g2 = statfn::gamma_j({2, ep.p, ep.r, c.alpha, d2});
  const double g4 = statfn::gamma_j({4, ep.p, ep.r, c.alpha, d2});
  const Eigen::VectorXd w = ep.ghalf_inv * delta;
  Eigen::MatrixXd out = c.gamma.mat().inverse() -
                        g2 * ep.ghalf_inv * ep.p_perp * ep.ghalf_inv +
                        (2.0 * g2 - g4) * w * w.transpose();
  return 0.5 * (out + out.transpose()).eval();
}

Eigen::MatrixXd amse_u(const SymPdMatrix& gamma) {
  return gamma.mat().inverse();
}

Eigen::MatrixXd amse_c(const SymPdMatrix& gamma,
                       const Eigen::MatrixXd& upsilon,
                       const Eigen::VectorXd& tau) {
  const EffPieces ep = eff_pieces(gamma, upsilon);
  if (tau.size() != ep.p) {
    throw domain_error("amse_c: tau dimension mismatch");
  }
  const Eigen::VectorXd w = ep.ghalf_inv * ep.p_perp * ep.ghalf * tau;
  Eigen::MatrixXd out =
      ep.ghalf_inv * ep.p_eff * ep.ghalf_inv + w * w.transpose();
  return 0.5 * (out + out.transpose()).eval();
}

Eigen::VectorXd delta_vec(const SymPdMatrix& gamma,
                          const Eigen::MatrixXd& upsilon,
                          const Eigen::VectorXd& tau) {
  const EffPieces ep = eff_pieces(gamma, upsilon);
  if (tau.size() != ep.p) {
    throw domain_error("delta_vec: tau dimension mismatch");
  }
  return ep.p_perp * ep.ghalf * tau;
}

double amse_scalar(const SymPdMatrix& gamma, const Eigen::MatrixXd& amse) {
  if (amse.rows() != gamma.dim() || amse.cols() != gamma.dim()) {
    throw domain_error("amse_scalar: dimension mismatch");
  }
  return (amse * gamma.mat()).trace();
}

double amse_scalar_pte_closed(int p, int r, double alpha, double delta_sq) {
  const double g2 = statfn::gamma_j({2, p, r, alpha, delta_sq});
  const double g4 = statfn::gamma_j({4, p, r, alpha, delta_sq});
  return static_cast<double>(p) - g2 * static_cast<double>(p - r) +
         (2.0 * g2 - g4) * delta_sq;
}

std::vector<Eigen::VectorXd> sample_limit_law(const UlanJointLaw& law,
                                              const ConstraintSpec& spec,
                                              const Eigen::VectorXd& tau,
                                              double threshold,
                                              std::int64_t n_draws,
                                              std::uint64_t seed) {
  validate_law(law);
  if (n_draws < 1) throw domain_error("sample_limit_law: need n_draws >= 1");
  const int p = law.p;
  if (spec.upsilon.rows() != p || tau.size() != p) {
    throw domain_error("sample_limit_law: dimension mismatch");
  }

  const Eigen::VectorXd mu_d = law.c * law.omega * tau;
  const Eigen::MatrixXd sigma_d = law.c * law.sigma * law.c.transpose();
  const Eigen::MatrixXd f_d = psd_factor(sigma_d);

  // Branch-wise conditional pieces; only the mean depends on the draw.
  const Eigen::MatrixXd cscinv = matstat::moore_penrose(sigma_d);
  const Eigen::MatrixXd l = law.sigma * law.c.transpose() * cscinv * law.c *
                            law.sigma;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd gain = law.a * law.sigma * law.c.transpose() * cscinv;
  const Eigen::VectorXd mean_rej_base = (law.a * law.omega - id) * tau;
  const Eigen::VectorXd mean_acc = (spec.upsilon * law.b * law.omega - id) * tau;
  const Eigen::MatrixXd ub = spec.upsilon * law.b;
  const Eigen::MatrixXd f_rej = psd_factor(law.a * (law.sigma - l) *
                                           law.a.transpose());
  const Eigen::MatrixXd f_acc = psd_factor(ub * (law.sigma - l) *
                                           ub.transpose());

  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n_draws));
  Rng rng = Rng::keyed(seed, 0x1a77ab5eull);
  Eigen::VectorXd xi(f_d.cols());
  for (std::int64_t i = 0; i < n_draws; ++i) {
    for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = rng.normal();
    const Eigen::VectorXd d = mu_d + f_d * xi;
    const bool accept = d.squaredNorm() <= threshold;
    const Eigen::MatrixXd& f = accept ? f_acc : f_rej;
    Eigen::VectorXd zeta(f.cols());
    for (Eigen::Index j = 0; j < zeta.size(); ++j) zeta(j) = rng.normal();
    Eigen::VectorXd z = accept ? mean_acc : (mean_rej_base + gain * (d - mu_d));
    z += f * zeta;
    out.push_back(std::move(z));
  }
  return out;
}

}  // namespace ptelab::pte
