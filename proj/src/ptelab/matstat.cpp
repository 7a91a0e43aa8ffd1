#include "ptelab/matstat.hpp"

#include <cmath>
#include <string>

#include "ptelab/errors.hpp"

namespace ptelab::matstat {

namespace {

double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void require_symmetric(const Eigen::MatrixXd& m, double tol,
                       const char* where) {
  if (m.rows() != m.cols()) {
    throw domain_error(std::string(where) + ": matrix must be square");
  }
  const double asym = max_abs(m - m.transpose());
  if (asym > tol * std::max(1.0, max_abs(m))) {
    throw domain_error(std::string(where) + ": matrix is not symmetric");
  }
}

}  // namespace

SymPdMatrix::SymPdMatrix(Eigen::MatrixXd m) {
  require_symmetric(m, 1e-12, "SymPdMatrix");
  m_ = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_,
                                                    Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > 1e-12 * hi)) {
    throw domain_error("SymPdMatrix: matrix is not positive definite");
  }
}

ShapeMatrix::ShapeMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
  const double det = m_.mat().determinant();
  if (std::abs(det - 1.0) > 1e-10) {
    throw domain_error("ShapeMatrix: determinant must be 1, got " +
                       std::to_string(det));
  }
}

Eigen::MatrixXd projection_matrix(const Eigen::MatrixXd& upsilon) {
  if (upsilon.cols() < 1 || upsilon.rows() < upsilon.cols()) {
    throw domain_error("projection_matrix: need a tall p x r matrix");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(upsilon, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-10 * sv(0))) {
    throw domain_error("projection_matrix: matrix is rank deficient");
  }
  const Eigen::MatrixXd u = svd.matrixU();
  return u * u.transpose();
}

EffProjection efficient_projection(const SymPdMatrix& gamma,
                                   const Eigen::MatrixXd& upsilon) {
  if (upsilon.rows() != gamma.dim()) {
    throw domain_error("efficient_projection: dimension mismatch");
  }
  const Eigen::MatrixXd w = sym_sqrt(gamma).mat() * upsilon;
  EffProjection out;
  out.p = projection_matrix(w);
  out.p_perp = Eigen::MatrixXd::Identity(gamma.dim(), gamma.dim()) - out.p;
  return out;
}

SymPdMatrix sym_sqrt(const SymPdMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
  const Eigen::VectorXd s = es.eigenvalues().cwiseSqrt();
  return SymPdMatrix(es.eigenvectors() * s.asDiagonal() *
                     es.eigenvectors().transpose());
}

Eigen::MatrixXd moore_penrose(const Eigen::MatrixXd& m) {
  require_symmetric(m, 1e-10, "moore_penrose");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = 1e-10 * ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > cutoff) inv(i) = 1.0 / ev(i);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd commutation_matrix(int k) {
  if (k < 1) throw domain_error("commutation_matrix: need k >= 1");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k * k, k * k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      out(a + k * b, b + k * a) = 1.0;
    }
  }
  return out;
}

Eigen::MatrixXd jk_matrix(int k) {
  if (k < 1) throw domain_error("jk_matrix: need k >= 1");
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(k, k);
  const Eigen::VectorXd v =
      Eigen::Map<const Eigen::VectorXd>(id.data(), k * k);
  return v * v.transpose();
}

Eigen::VectorXd vech_ring(const Eigen::MatrixXd& v) {
  require_symmetric(v, 1e-12, "vech_ring");
  const int k = static_cast<int>(v.rows());
  Eigen::VectorXd out(dk(k));
  int idx = 0;
  for (int j = 0; j < k; ++j) {
    for (int i = j; i < k; ++i) {
      if (i == 0 && j == 0) continue;
      out(idx++) = v(i, j);
    }
  }
  return out;
}

Eigen::MatrixXd sym_from_vech_ring(const Eigen::VectorXd& u, double v11,
                                   int k) {
  if (u.size() != dk(k)) {
    throw domain_error("sym_from_vech_ring: coordinate length mismatch");
  }
  Eigen::MatrixXd w(k, k);
  w(0, 0) = v11;
  int idx = 0;
  for (int j = 0; j < k; ++j) {
    for (int i = j; i < k; ++i) {
      if (i == 0 && j == 0) continue;
      w(i, j) = u(idx);
      w(j, i) = u(idx);
      ++idx;
    }
  }
  return w;
}

ShapeMatrix shape_from_vech_ring(const Eigen::VectorXd& u, int k) {
  // det is linear in the (1,1) entry (cofactor expansion), so two
  // evaluations solve it exactly.
  const Eigen::MatrixXd w0 = sym_from_vech_ring(u, 0.0, k);
  const Eigen::MatrixXd w1 = sym_from_vech_ring(u, 1.0, k);
  const double d0 = w0.determinant();
  const double slope = w1.determinant() - d0;
  if (!(std::abs(slope) > 1e-300)) {
    throw domain_error("shape_from_vech_ring: degenerate trailing block");
  }
  return ShapeMatrix(sym_from_vech_ring(u, (1.0 - d0) / slope, k));
}

Eigen::MatrixXd mk_matrix(const SymPdMatrix& v) {
  const int k = v.dim();
  const int d = dk(k);
  const Eigen::MatrixXd vinv = v.mat().inverse();
  Eigen::MatrixXd m(d, k * k);
  for (int t = 0; t < d; ++t) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    u(t) = 1.0;
    const Eigen::MatrixXd w0 = sym_from_vech_ring(u, 0.0, k);
    const double v11 = -(vinv.cwiseProduct(w0)).sum() / vinv(0, 0);
    const Eigen::MatrixXd w = sym_from_vech_ring(u, v11, k);
    m.row(t) = Eigen::Map<const Eigen::VectorXd>(w.data(), k * k).transpose();
  }
  return m;
}

Eigen::MatrixXd hk_matrix(const SymPdMatrix& v) {
  const int k = v.dim();
  const Eigen::MatrixXd m = mk_matrix(v);
  const Eigen::MatrixXd vinv = v.mat().inverse();
  const Eigen::MatrixXd kk = commutation_matrix(k);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(k * k, k * k);
  const Eigen::MatrixXd h =
      0.25 * m * (id + kk) * kron(vinv, vinv) * m.transpose();
  return 0.5 * (h + h.transpose());
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace ptelab::matstat
