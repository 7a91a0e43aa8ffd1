#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "ptelab/matstat.hpp"

namespace ptelab::mcov {

enum class Constraint { scale, shape, cov };

// Parameter point for m zero-mean Gaussian samples of dimension k: one scale
// per sample followed by one unit-determinant shape per sample. Flattened
// layout is (scales..., off-first-entry half-vectorizations...), of total
// length p = m * (dk(k) + 1).
class MultiCovTheta {
 public:
  MultiCovTheta(std::vector<double> scales,
                std::vector<matstat::ShapeMatrix> shapes);

  int m() const { return static_cast<int>(scales_.size()); }
  int k() const { return shapes_.front().dim(); }
  int p() const { return m() * (matstat::dk(k()) + 1); }
  double scale(int i) const { return scales_.at(i); }
  const matstat::ShapeMatrix& shape(int i) const { return shapes_.at(i); }
  Eigen::MatrixXd sigma(int i) const;  // scale * shape

  Eigen::VectorXd flatten() const;
  // Rebuilds the dropped leading shape entries from the unit-determinant
  // constraint; inverse of flatten.
  static MultiCovTheta unflatten(const Eigen::VectorXd& v, int m, int k);

 private:
  std::vector<double> scales_;
  std::vector<matstat::ShapeMatrix> shapes_;
};

// Uncentered second-moment matrix of the rows. Rank deficiency is recorded,
// not thrown: downstream consumers decide whether it is fatal.
struct SampleCov {
  Eigen::MatrixXd mat;
  bool rank_deficient;
};

SampleCov sample_cov(const Eigen::MatrixXd& data);

// Immutable bundle of m samples with common column dimension. Holds the
// per-sample and pooled second-moment matrices.
class SampleSet {
 public:
  explicit SampleSet(std::vector<Eigen::MatrixXd> data);

  int m() const { return static_cast<int>(counts_.size()); }
  int k() const { return static_cast<int>(pooled_.cols()); }
  long n_i(int i) const { return counts_.at(i); }
  long n() const { return total_; }
  double lambda(int i) const {
    return static_cast<double>(counts_.at(i)) / static_cast<double>(total_);
  }
  std::vector<double> lambdas() const;
  const Eigen::MatrixXd& s_i(int i) const { return covs_.at(i).mat; }
  const Eigen::MatrixXd& pooled() const { return pooled_; }
  bool any_rank_deficient() const;

 private:
  std::vector<long> counts_;
  std::vector<SampleCov> covs_;
  Eigen::MatrixXd pooled_;
  long total_;
};

// scale = det(sigma)^(1/k) via log-space eigenvalues, shape = sigma / scale.
std::pair<double, matstat::ShapeMatrix> decompose_cov(
    const matstat::SymPdMatrix& sigma);

MultiCovTheta unconstrained_estimator(const SampleSet& samples);

// Pools the component named by the constraint; leaves the other per-sample.
MultiCovTheta constrained_estimator(const SampleSet& samples, Constraint kind);

// Scale scores then shape scores, each scaled by sqrt(n_i) / (2 sigma_i^2).
Eigen::VectorXd central_sequence(const MultiCovTheta& theta,
                                 const SampleSet& samples);

// Block-diagonal: diag(k / (2 sigma_i^4)) then the per-sample shape blocks.
Eigen::MatrixXd information_matrix(const MultiCovTheta& theta);

Eigen::MatrixXd constraint_matrix(Constraint kind, int m, int k);
int constraint_rank(Constraint kind, int m, int k);

// diag(lambda_i^{-1/2}) on scales, lambda_i^{-1/2} I_dk per shape block.
Eigen::MatrixXd rn_matrix(const std::vector<double>& lambdas, int m, int k);

// Quadratic form of the central sequence at the constrained estimate, with
// the sample-size-imbalance correction; nonnegative by construction and
// clamped against rounding.
double test_statistic(const MultiCovTheta& theta_c, const SampleSet& samples,
                      Constraint kind);

MultiCovTheta pte_estimator(const SampleSet& samples, Constraint kind,
                            double alpha);

// Second-sample covariance used on the simulation grid: scale e^{ell/400},
// shape I_2 tilted off-diagonally by ell / sqrt(n) and renormalized to unit
// determinant.
matstat::SymPdMatrix sigma_ell(int ell, long n);

}  // namespace ptelab::mcov
