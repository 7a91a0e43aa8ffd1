#pragma once

#include <Eigen/Dense>

namespace ptelab::matstat {

// Free parameters of a unit-determinant k x k shape matrix.
inline int dk(int k) { return k * (k + 1) / 2 - 1; }

// Symmetric positive definite matrix, validated on construction: symmetry
// within 1e-12 and min eigenvalue > 1e-12 * max eigenvalue. Entries are
// symmetrized once so downstream algebra never sees the asymmetric dust.
class SymPdMatrix {
 public:
  explicit SymPdMatrix(Eigen::MatrixXd m);
  const Eigen::MatrixXd& mat() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

 private:
  Eigen::MatrixXd m_;
};

// SymPdMatrix with det = 1 within 1e-10.
class ShapeMatrix {
 public:
  explicit ShapeMatrix(Eigen::MatrixXd m);
  const Eigen::MatrixXd& mat() const { return m_.mat(); }
  int dim() const { return m_.dim(); }
  const SymPdMatrix& pd() const { return m_; }

 private:
  SymPdMatrix m_;
};

// Orthogonal projector onto the column space of upsilon.
Eigen::MatrixXd projection_matrix(const Eigen::MatrixXd& upsilon);

struct EffProjection {
  Eigen::MatrixXd p;       // projector onto span(gamma^{1/2} upsilon)
  Eigen::MatrixXd p_perp;  // its complement
};
EffProjection efficient_projection(const SymPdMatrix& gamma,
                                   const Eigen::MatrixXd& upsilon);

SymPdMatrix sym_sqrt(const SymPdMatrix& m);

// Pseudo-inverse of a symmetric PSD matrix; eigenvalues below
// 1e-10 * (largest) are treated as exact zeros.
Eigen::MatrixXd moore_penrose(const Eigen::MatrixXd& m);

// K_k: K * vec(A) = vec(A') for every k x k matrix A.
Eigen::MatrixXd commutation_matrix(int k);

// (vec I_k)(vec I_k)'.
Eigen::MatrixXd jk_matrix(int k);

// Column-major lower-triangular half-vectorization without the (1,1) entry.
Eigen::VectorXd vech_ring(const Eigen::MatrixXd& v);

// Symmetric matrix with the given vech_ring coordinates and (1,1) entry.
Eigen::MatrixXd sym_from_vech_ring(const Eigen::VectorXd& u, double v11,
                                   int k);

// Unit-determinant symmetric matrix with the given vech_ring coordinates;
// the (1,1) entry is the unique root of the (linear in that entry)
// determinant equation. Must yield a positive definite matrix.
ShapeMatrix shape_from_vech_ring(const Eigen::VectorXd& u, int k);

// d_k x k^2 matrix M with M' (vech_ring w) = vec w for every symmetric w
// satisfying tr[V^{-1} w] = 0; built column by column from basis vectors,
// solving the (1,1) entry from the trace constraint.
Eigen::MatrixXd mk_matrix(const SymPdMatrix& v);

// Shape-block information matrix (1/4) M (I + K) (V (x) V)^{-1} M'.
Eigen::MatrixXd hk_matrix(const SymPdMatrix& v);

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace ptelab::matstat
