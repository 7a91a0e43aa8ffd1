#include "ptelab/model_multicov.hpp"

#include <cmath>
#include <utility>

#include "ptelab/errors.hpp"
#include "ptelab/pte_core.hpp"
#include "ptelab/statfn.hpp"

namespace ptelab::mcov {

namespace {

void require_compatible(const MultiCovTheta& theta, const SampleSet& samples) {
  if (theta.m() != samples.m() || theta.k() != samples.k()) {
    throw domain_error("multicov: parameter and sample layout disagree");
  }
}

void require_multi(int m) {
  if (m < 2) throw domain_error("multicov: constraint needs m >= 2");
}

}  // namespace

MultiCovTheta::MultiCovTheta(std::vector<double> scales,
                             std::vector<matstat::ShapeMatrix> shapes)
    : scales_(std::move(scales)), shapes_(std::move(shapes)) {
  if (scales_.empty() || scales_.size() != shapes_.size()) {
    throw domain_error("multicov: need one scale per shape");
  }
  const int k = shapes_.front().dim();
  for (const auto& v : shapes_) {
    if (v.dim() != k) throw domain_error("multicov: mixed shape dimensions");
  }
  for (double s : scales_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw domain_error("multicov: scales must be positive");
    }
  }
}

Eigen::MatrixXd MultiCovTheta::sigma(int i) const {
  return scales_.at(i) * shapes_.at(i).mat();
}

Eigen::VectorXd MultiCovTheta::flatten() const {
  const int d = matstat::dk(k());
  Eigen::VectorXd out(p());
  for (int i = 0; i < m(); ++i) out(i) = scales_[i];
  for (int i = 0; i < m(); ++i) {
    out.segment(m() + i * d, d) = matstat::vech_ring(shapes_[i].mat());
  }
  return out;
}

MultiCovTheta MultiCovTheta::unflatten(const Eigen::VectorXd& v, int m,
                                       int k) {
  if (m < 1 || k < 2) throw domain_error("multicov: bad layout");
  const int d = matstat::dk(k);
  if (v.size() != m * (d + 1)) {
    throw domain_error("multicov: flattened length does not match layout");
  }
  std::vector<double> scales(v.data(), v.data() + m);
  std::vector<matstat::ShapeMatrix> shapes;
  shapes.reserve(m);
  for (int i = 0; i < m; ++i) {
    shapes.push_back(matstat::shape_from_vech_ring(v.segment(m + i * d, d), k));
  }
  return MultiCovTheta(std::move(scales), std::move(shapes));
}

SampleCov sample_cov(const Eigen::MatrixXd& data) {
  if (data.rows() < 1 || data.cols() < 1) {
    throw domain_error("multicov: empty sample");
  }
  if (!data.allFinite()) throw domain_error("multicov: non-finite sample");
  const Eigen::MatrixXd s =
      data.transpose() * data / static_cast<double>(data.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  const bool deficient =
      top <= 0.0 || es.eigenvalues().minCoeff() <= 1e-12 * top;
  return SampleCov{s, deficient};
}

SampleSet::SampleSet(std::vector<Eigen::MatrixXd> data) {
  if (data.empty()) throw domain_error("multicov: no samples");
  const Eigen::Index k = data.front().cols();
  if (k < 1) throw domain_error("multicov: zero-width sample");
  total_ = 0;
  pooled_ = Eigen::MatrixXd::Zero(k, k);
  for (const auto& block : data) {
    if (block.cols() != k) {
      throw domain_error("multicov: samples have mixed dimensions");
    }
    counts_.push_back(block.rows());
    covs_.push_back(sample_cov(block));
    total_ += block.rows();
    pooled_ += block.transpose() * block;
  }
  pooled_ /= static_cast<double>(total_);
}

std::vector<double> SampleSet::lambdas() const {
  std::vector<double> out;
  out.reserve(counts_.size());
  for (int i = 0; i < m(); ++i) out.push_back(lambda(i));
  return out;
}

bool SampleSet::any_rank_deficient() const {
  for (const auto& c : covs_) {
    if (c.rank_deficient) return true;
  }
  return false;
}

std::pair<double, matstat::ShapeMatrix> decompose_cov(
    const matstat::SymPdMatrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma.mat(),
                                                    Eigen::EigenvaluesOnly);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    log_det += std::log(es.eigenvalues()(i));
  }
  const double scale = std::exp(log_det / sigma.dim());
  return {scale, matstat::ShapeMatrix(sigma.mat() / scale)};
}

MultiCovTheta unconstrained_estimator(const SampleSet& samples) {
  std::vector<double> scales;
  std::vector<matstat::ShapeMatrix> shapes;
  for (int i = 0; i < samples.m(); ++i) {
    auto [scale, shape] = decompose_cov(matstat::SymPdMatrix(samples.s_i(i)));
    scales.push_back(scale);
    shapes.push_back(std::move(shape));
  }
  return MultiCovTheta(std::move(scales), std::move(shapes));
}

MultiCovTheta constrained_estimator(const SampleSet& samples,
                                    Constraint kind) {
  require_multi(samples.m());
  const auto pooled = decompose_cov(matstat::SymPdMatrix(samples.pooled()));
  const MultiCovTheta u = unconstrained_estimator(samples);
  std::vector<double> scales;
  std::vector<matstat::ShapeMatrix> shapes;
  for (int i = 0; i < samples.m(); ++i) {
    const bool pool_scale = kind != Constraint::shape;
    const bool pool_shape = kind != Constraint::scale;
    scales.push_back(pool_scale ? pooled.first : u.scale(i));
    shapes.push_back(pool_shape ? pooled.second : u.shape(i));
  }
  return MultiCovTheta(std::move(scales), std::move(shapes));
}

Eigen::VectorXd central_sequence(const MultiCovTheta& theta,
                                 const SampleSet& samples) {
  require_compatible(theta, samples);
  const int m = theta.m();
  const int k = theta.k();
  const int d = matstat::dk(k);
  Eigen::VectorXd out(theta.p());
  for (int i = 0; i < m; ++i) {
    const double s2 = theta.scale(i);
    const Eigen::MatrixXd& v = theta.shape(i).mat();
    const Eigen::MatrixXd vinv = v.inverse();
    const Eigen::MatrixXd& si = samples.s_i(i);
    const double root_n = std::sqrt(static_cast<double>(samples.n_i(i)));
    out(i) = root_n / (2.0 * s2) *
             (vinv * (si - s2 * v)).trace() / s2;
    const Eigen::MatrixXd inner = vinv * si * vinv;
    const Eigen::MatrixXd mk = matstat::mk_matrix(theta.shape(i).pd());
    out.segment(m + i * d, d) =
        root_n / (2.0 * s2) * mk *
        Eigen::Map<const Eigen::VectorXd>(inner.data(), k * k);
  }
  return out;
}

Eigen::MatrixXd information_matrix(const MultiCovTheta& theta) {
  const int m = theta.m();
  const int k = theta.k();
  const int d = matstat::dk(k);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(theta.p(), theta.p());
  for (int i = 0; i < m; ++i) {
    const double s2 = theta.scale(i);
    out(i, i) = 0.5 * k / (s2 * s2);
    out.block(m + i * d, m + i * d, d, d) =
        matstat::hk_matrix(theta.shape(i).pd());
  }
  return out;
}

Eigen::MatrixXd constraint_matrix(Constraint kind, int m, int k) {
  require_multi(m);
  if (k < 2) throw domain_error("multicov: k must be >= 2");
  const int d = matstat::dk(k);
  const int p = m * (d + 1);
  const int r = constraint_rank(kind, m, k);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, r);
  if (kind == Constraint::scale) {
    out.block(0, 0, m, 1) = Eigen::VectorXd::Ones(m);
    out.block(m, 1, m * d, m * d) = Eigen::MatrixXd::Identity(m * d, m * d);
  } else if (kind == Constraint::shape) {
    out.block(0, 0, m, m) = Eigen::MatrixXd::Identity(m, m);
    for (int i = 0; i < m; ++i) {
      out.block(m + i * d, m, d, d) = Eigen::MatrixXd::Identity(d, d);
    }
  } else {
    out.block(0, 0, m, 1) = Eigen::VectorXd::Ones(m);
    for (int i = 0; i < m; ++i) {
      out.block(m + i * d, 1, d, d) = Eigen::MatrixXd::Identity(d, d);
    }
  }
  return out;
}

int constraint_rank(Constraint kind, int m, int k) {
  const int d = matstat::dk(k);
  switch (kind) {
    case Constraint::scale:
      return 1 + m * d;
    case Constraint::shape:
      return m + d;
    default:
      return 1 + d;
  }
}

Eigen::MatrixXd rn_matrix(const std::vector<double>& lambdas, int m, int k) {
  if (static_cast<int>(lambdas.size()) != m) {
    throw domain_error("multicov: lambda count does not match m");
  }
  const int d = matstat::dk(k);
  Eigen::VectorXd diag(m * (d + 1));
  for (int i = 0; i < m; ++i) {
    const double lam = lambdas[i];
    if (!(lam > 0.0) || lam > 1.0) {
      throw domain_error("multicov: lambdas must lie in (0, 1]");
    }
    const double w = 1.0 / std::sqrt(lam);
    diag(i) = w;
    diag.segment(m + i * d, d).setConstant(w);
  }
  return diag.asDiagonal();
}

double test_statistic(const MultiCovTheta& theta_c, const SampleSet& samples,
                      Constraint kind) {
  require_compatible(theta_c, samples);
  require_multi(samples.m());
  const int m = samples.m();
  const int k = samples.k();
  const Eigen::VectorXd delta = central_sequence(theta_c, samples);
  const Eigen::MatrixXd gamma = information_matrix(theta_c);
  const Eigen::MatrixXd rinv =
      rn_matrix(samples.lambdas(), m, k).diagonal().cwiseInverse().asDiagonal();
  const Eigen::MatrixXd w = rinv * constraint_matrix(kind, m, k);
  const Eigen::MatrixXd core = w.transpose() * gamma * w;
  const Eigen::MatrixXd bracket =
      gamma.inverse() - w * core.ldlt().solve(w.transpose());
  const double q = delta.dot(bracket * delta);
  return q > 0.0 ? q : 0.0;
}

MultiCovTheta pte_estimator(const SampleSet& samples, Constraint kind,
                            double alpha) {
  const MultiCovTheta u = unconstrained_estimator(samples);
  const MultiCovTheta c = constrained_estimator(samples, kind);
  const double q = test_statistic(c, samples, kind);
  const int p = u.p();
  const int r = constraint_rank(kind, samples.m(), samples.k());
  const double threshold = statfn::pte_threshold(p, r, alpha);
  const Eigen::VectorXd combined =
      pte::pte_combine(u.flatten(), c.flatten(), q, threshold);
  return MultiCovTheta::unflatten(combined, samples.m(), samples.k());
}

matstat::SymPdMatrix sigma_ell(int ell, long n) {
  if (ell < 0) throw domain_error("multicov: ell must be >= 0");
  if (n < 1) throw domain_error("multicov: n must be >= 1");
  const double c = static_cast<double>(ell) / std::sqrt(static_cast<double>(n));
  if (!(c < 1.0)) {
    throw domain_error("multicov: tilt too large for a definite matrix");
  }
  Eigen::Matrix2d b;
  b << 1.0, c, c, 1.0;
  const double unit = std::sqrt(b.determinant());
  return matstat::SymPdMatrix(std::exp(ell / 400.0) * b / unit);
}

}  // namespace ptelab::mcov
