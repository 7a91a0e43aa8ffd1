#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ptelab/errors.hpp"
#include "ptelab/matstat.hpp"
#include "ptelab/model_multicov.hpp"
#include "ptelab/rng.hpp"
#include "ptelab/statfn.hpp"
#include "support/fisher_fd.hpp"
#include "support/random_mats.hpp"

using namespace ptelab;
using namespace ptelab::mcov;
using matstat::ShapeMatrix;
using matstat::SymPdMatrix;
using testsup::gaussian_rows;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// A deliberately non-trivial two-sample parameter point.
MultiCovTheta crooked_theta() {
  Eigen::VectorXd u(2);
  u << 0.3, 0.9;
  std::vector<ShapeMatrix> shapes;
  shapes.push_back(ShapeMatrix(Eigen::MatrixXd::Identity(2, 2)));
  shapes.push_back(matstat::shape_from_vech_ring(u, 2));
  return MultiCovTheta({1.0, 1.44}, std::move(shapes));
}

SampleSet simulate(const MultiCovTheta& theta, const std::vector<int>& sizes,
                   Rng& rng) {
  std::vector<Eigen::MatrixXd> data;
  for (int i = 0; i < theta.m(); ++i) {
    data.push_back(gaussian_rows(sizes[i], theta.sigma(i), rng));
  }
  return SampleSet(std::move(data));
}

}  // namespace

TEST_CASE("scale-shape decomposition") {
  auto [s1, v1] = decompose_cov(SymPdMatrix(Eigen::MatrixXd::Identity(2, 2)));
  CHECK(s1 == doctest::Approx(1.0));
  CHECK(max_abs(v1.mat() - Eigen::MatrixXd::Identity(2, 2)) < 1e-14);

  auto [s4, v4] =
      decompose_cov(SymPdMatrix(4.0 * Eigen::MatrixXd::Identity(2, 2)));
  CHECK(s4 == doctest::Approx(4.0));
  CHECK(max_abs(v4.mat() - Eigen::MatrixXd::Identity(2, 2)) < 1e-14);

  Rng rng(3001u);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform() * 3);
    const Eigen::MatrixXd sig = testsup::random_pd(k, rng);
    auto [scale, shape] = decompose_cov(SymPdMatrix(sig));
    CHECK(max_abs(scale * shape.mat() - sig) < 1e-10 * max_abs(sig));
    CHECK(shape.mat().determinant() == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("second-moment matrix of raw rows") {
  Eigen::MatrixXd one_row(1, 2);
  one_row << 1.0, 0.0;
  const SampleCov c1 = sample_cov(one_row);
  Eigen::Matrix2d e1;
  e1 << 1.0, 0.0, 0.0, 0.0;
  CHECK(max_abs(c1.mat - e1) < 1e-15);
  CHECK(c1.rank_deficient);

  Eigen::MatrixXd same(5, 2);
  same.col(0).setOnes();
  same.col(1).setOnes();
  const SampleCov c2 = sample_cov(same);
  CHECK(max_abs(c2.mat - Eigen::Matrix2d::Ones()) < 1e-15);
  CHECK(c2.rank_deficient);

  Rng rng(3002u);
  Eigen::Matrix2d sigma;
  sigma << 2.0, 0.5, 0.5, 1.0;
  const int n = 100000;
  const SampleCov big = sample_cov(gaussian_rows(n, sigma, rng));
  CHECK_FALSE(big.rank_deficient);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double se = std::sqrt(
          (sigma(a, a) * sigma(b, b) + sigma(a, b) * sigma(a, b)) / n);
      CHECK(std::abs(big.mat(a, b) - sigma(a, b)) < 3.0 * se);
    }
  }
}

TEST_CASE("sample bundle bookkeeping") {
  Rng rng(3003u);
  std::vector<Eigen::MatrixXd> data;
  data.push_back(testsup::randn(30, 2, rng));
  data.push_back(testsup::randn(70, 2, rng));
  SampleSet set(data);
  CHECK(set.m() == 2);
  CHECK(set.k() == 2);
  CHECK(set.n() == 100);
  CHECK(set.lambda(0) == doctest::Approx(0.3));
  CHECK(set.lambda(1) == doctest::Approx(0.7));
  const Eigen::MatrixXd mix = 0.3 * set.s_i(0) + 0.7 * set.s_i(1);
  CHECK(max_abs(set.pooled() - mix) < 1e-12);

  data[1] = testsup::randn(10, 3, rng);
  CHECK_THROWS_AS(SampleSet{data}, domain_error);
}

TEST_CASE("parameter layout round trip") {
  const MultiCovTheta theta = crooked_theta();
  CHECK(theta.p() == 6);
  const Eigen::VectorXd flat = theta.flatten();
  REQUIRE(flat.size() == 6);
  CHECK(flat(0) == 1.0);
  CHECK(flat(1) == 1.44);
  CHECK(flat(2) == 0.0);  // identity shape has empty off-entries
  CHECK(flat(3) == 1.0);
  CHECK(flat(4) == doctest::Approx(0.3));
  CHECK(flat(5) == doctest::Approx(0.9));
  const MultiCovTheta back = MultiCovTheta::unflatten(flat, 2, 2);
  CHECK(max_abs(back.flatten() - flat) < 1e-12);
  for (int i = 0; i < 2; ++i) {
    CHECK(max_abs(back.shape(i).mat() - theta.shape(i).mat()) < 1e-12);
  }
  CHECK_THROWS_AS(MultiCovTheta::unflatten(flat, 3, 2), domain_error);
  CHECK_THROWS_AS(MultiCovTheta({-1.0}, {ShapeMatrix(Eigen::MatrixXd::Identity(2, 2))}),
                  domain_error);
}

TEST_CASE("unpooled estimator") {
  Eigen::MatrixXd block(2, 2);
  block << std::sqrt(2.0), 0.0, 0.0, std::sqrt(2.0);
  SampleSet set({block, block});
  const MultiCovTheta u = unconstrained_estimator(set);
  CHECK(u.scale(0) == doctest::Approx(1.0));
  CHECK(u.scale(1) == doctest::Approx(1.0));
  CHECK(max_abs(u.shape(0).mat() - Eigen::MatrixXd::Identity(2, 2)) < 1e-12);

  // single sample: plain decomposition of its second-moment matrix
  Rng rng(3004u);
  const Eigen::MatrixXd data = testsup::randn(50, 2, rng);
  SampleSet solo({data});
  const MultiCovTheta usolo = unconstrained_estimator(solo);
  auto [scale, shape] = decompose_cov(SymPdMatrix(solo.s_i(0)));
  CHECK(usolo.scale(0) == doctest::Approx(scale));
  CHECK(max_abs(usolo.shape(0).mat() - shape.mat()) < 1e-12);

  // the decomposition is a bijection back to the second-moment matrices
  SampleSet pair({testsup::randn(40, 2, rng), testsup::randn(60, 2, rng)});
  const MultiCovTheta upair = unconstrained_estimator(pair);
  for (int i = 0; i < 2; ++i) {
    CHECK(max_abs(upair.sigma(i) - pair.s_i(i)) < 1e-12);
  }
}

TEST_CASE("pooled estimators by kind") {
  Rng rng(3005u);
  const MultiCovTheta truth = crooked_theta();
  const SampleSet set = simulate(truth, {300, 500}, rng);
  const MultiCovTheta u = unconstrained_estimator(set);
  const auto pooled = decompose_cov(SymPdMatrix(set.pooled()));

  const MultiCovTheta cs = constrained_estimator(set, Constraint::scale);
  CHECK(cs.scale(0) == doctest::Approx(pooled.first));
  CHECK(cs.scale(1) == doctest::Approx(pooled.first));
  for (int i = 0; i < 2; ++i) {
    CHECK(max_abs(cs.shape(i).mat() - u.shape(i).mat()) < 1e-14);
  }

  const MultiCovTheta ch = constrained_estimator(set, Constraint::shape);
  for (int i = 0; i < 2; ++i) {
    CHECK(ch.scale(i) == doctest::Approx(u.scale(i)));
    CHECK(max_abs(ch.shape(i).mat() - pooled.second.mat()) < 1e-14);
  }

  // identical samples make pooling a no-op
  Eigen::MatrixXd block = testsup::randn(80, 2, rng);
  SampleSet twin({block, block});
  const MultiCovTheta twin_u = unconstrained_estimator(twin);
  for (Constraint kind :
       {Constraint::scale, Constraint::shape, Constraint::cov}) {
    const MultiCovTheta c = constrained_estimator(twin, kind);
    CHECK(max_abs(c.flatten() - twin_u.flatten()) < 1e-12);
  }
}

TEST_CASE("pooled estimators satisfy their constraint exactly") {
  Rng rng(3006u);
  const SampleSet set = simulate(crooked_theta(), {200, 350}, rng);
  for (Constraint kind :
       {Constraint::scale, Constraint::shape, Constraint::cov}) {
    const Eigen::MatrixXd ups = constraint_matrix(kind, 2, 2);
    const Eigen::MatrixXd proj = matstat::projection_matrix(ups);
    const Eigen::VectorXd flat = constrained_estimator(set, kind).flatten();
    CHECK((flat - proj * flat).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("score vector vanishes at the exact-fit point") {
  Rng rng(3007u);
  const SampleSet set = simulate(crooked_theta(), {100, 150}, rng);
  // theta rebuilt from the observed second moments fits them exactly
  const MultiCovTheta u = unconstrained_estimator(set);
  const Eigen::VectorXd score = central_sequence(u, set);
  CHECK(score.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("score vector has the advertised first two moments") {
  // At the true parameter the score is exactly centered with covariance equal
  // to the information matrix (Gaussian samples, any n). The covariance
  // comparison runs 21 entrywise checks at once, so the per-entry band is
  // 4 SE to keep the familywise false-alarm rate near the 3-SE single-test
  // level; the replication count makes that band tighter in absolute terms
  // than 3 SE at 10^4 replications.
  const MultiCovTheta truth = crooked_theta();
  const Eigen::MatrixXd gamma = information_matrix(truth);
  const std::vector<int> sizes = {30, 50};
  const int reps = 80000;
  const int p = truth.p();
  Rng rng(3008u);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd sumsq2 = Eigen::MatrixXd::Zero(p, p);
  for (int rep = 0; rep < reps; ++rep) {
    const SampleSet set = simulate(truth, sizes, rng);
    const Eigen::VectorXd score = central_sequence(truth, set);
    sum += score;
    const Eigen::MatrixXd ss = score * score.transpose();
    sumsq += ss;
    sumsq2 += ss.cwiseProduct(ss);
  }
  const Eigen::VectorXd mean = sum / reps;
  const Eigen::MatrixXd m2 = sumsq / reps;
  for (int i = 0; i < p; ++i) {
    const double se = std::sqrt((m2(i, i) - mean(i) * mean(i)) / reps);
    CHECK(std::abs(mean(i)) < 3.0 * se);
  }
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double se =
          std::sqrt((sumsq2(i, j) / reps - m2(i, j) * m2(i, j)) / reps);
      // cov = m2 - mean mean'; the mean part is second order, fold it in
      const double cov = m2(i, j) - mean(i) * mean(j);
      CHECK(std::abs(cov - gamma(i, j)) < 4.0 * se + 1e-12);
    }
  }
}

TEST_CASE("information matrix blocks") {
  std::vector<ShapeMatrix> one;
  one.push_back(ShapeMatrix(Eigen::MatrixXd::Identity(2, 2)));
  const MultiCovTheta tiny({1.0}, std::move(one));
  CHECK(max_abs(information_matrix(tiny) - Eigen::MatrixXd::Identity(3, 3)) <
        1e-12);

  const MultiCovTheta theta = crooked_theta();
  const Eigen::MatrixXd gamma = information_matrix(theta);
  CHECK(gamma(0, 0) == doctest::Approx(1.0));
  CHECK(gamma(1, 1) == doctest::Approx(1.0 / (1.44 * 1.44)));
  // scale-shape and cross-sample blocks are exactly zero
  CHECK(max_abs(gamma.block(0, 2, 2, 4)) == 0.0);
  CHECK(max_abs(gamma.block(2, 0, 4, 2)) == 0.0);
  CHECK(max_abs(gamma.block(2, 4, 2, 2)) == 0.0);
  CHECK(gamma(0, 1) == 0.0);

  // against numerical differentiation of the expected log-likelihood
  for (int i = 0; i < 2; ++i) {
    const int d = matstat::dk(2);
    Eigen::MatrixXd block(1 + d, 1 + d);
    block(0, 0) = gamma(i, i);
    block.block(0, 1, 1, d).setZero();
    block.block(1, 0, d, 1).setZero();
    block.block(1, 1, d, d) = gamma.block(2 + i * d, 2 + i * d, d, d);
    const Eigen::MatrixXd fd =
        testsup::gaussian_cov_fisher_fd(theta.scale(i), theta.shape(i).mat());
    CHECK((block - fd).norm() < 1e-3 * fd.norm());
  }
}

TEST_CASE("constraint matrices and their nesting") {
  const Eigen::MatrixXd cov = constraint_matrix(Constraint::cov, 2, 2);
  CHECK(cov.rows() == 6);
  CHECK(cov.cols() == 3);
  CHECK(constraint_rank(Constraint::cov, 2, 2) == 3);
  CHECK(constraint_rank(Constraint::scale, 2, 2) == 5);
  CHECK(constraint_rank(Constraint::shape, 2, 2) == 4);

  // homogeneous-covariance points satisfy the weaker constraints too
  for (Constraint outer : {Constraint::scale, Constraint::shape}) {
    const Eigen::MatrixXd proj =
        matstat::projection_matrix(constraint_matrix(outer, 2, 2));
    CHECK(max_abs(proj * cov - cov) < 1e-12);
  }

  // full column rank
  for (Constraint kind :
       {Constraint::scale, Constraint::shape, Constraint::cov}) {
    const Eigen::MatrixXd ups = constraint_matrix(kind, 3, 2);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ups);
    CHECK(svd.singularValues().minCoeff() > 0.5);
  }
}

TEST_CASE("imbalance weights") {
  const Eigen::MatrixXd even = rn_matrix({0.5, 0.5}, 2, 2);
  CHECK(max_abs(even - std::sqrt(2.0) * Eigen::MatrixXd::Identity(6, 6)) <
        1e-12);

  const Eigen::MatrixXd skew = rn_matrix({0.25, 0.75}, 2, 2);
  Eigen::VectorXd expect(6);
  const double a = 2.0;
  const double b = 2.0 / std::sqrt(3.0);
  expect << a, b, a, a, b, b;
  CHECK(max_abs(skew - Eigen::MatrixXd(expect.asDiagonal())) < 1e-12);

  CHECK_THROWS_AS(rn_matrix({0.0, 1.0}, 2, 2), domain_error);
}

TEST_CASE("homogeneity statistic is a true quadratic form") {
  Rng rng(3009u);
  for (int trial = 0; trial < 5; ++trial) {
    const SampleSet set = simulate(crooked_theta(), {150, 250}, rng);
    for (Constraint kind :
         {Constraint::scale, Constraint::shape, Constraint::cov}) {
      const MultiCovTheta c = constrained_estimator(set, kind);
      CHECK(test_statistic(c, set, kind) >= 0.0);
    }
  }
}

TEST_CASE("statistic bracket annihilates the weighted constraint directions") {
  Rng rng(3010u);
  const SampleSet set = simulate(crooked_theta(), {150, 250}, rng);
  const MultiCovTheta c = constrained_estimator(set, Constraint::cov);
  const Eigen::MatrixXd gamma = information_matrix(c);
  const Eigen::MatrixXd rinv = rn_matrix(set.lambdas(), 2, 2)
                                   .diagonal()
                                   .cwiseInverse()
                                   .asDiagonal();
  const Eigen::MatrixXd w = rinv * constraint_matrix(Constraint::cov, 2, 2);
  const Eigen::MatrixXd bracket =
      gamma.inverse() -
      w * (w.transpose() * gamma * w).ldlt().solve(w.transpose());
  CHECK(max_abs(bracket * gamma * w) < 1e-10);

  // with identity information (the null point) the weighting drops out
  std::vector<ShapeMatrix> eyes;
  eyes.push_back(ShapeMatrix(Eigen::MatrixXd::Identity(2, 2)));
  eyes.push_back(ShapeMatrix(Eigen::MatrixXd::Identity(2, 2)));
  const MultiCovTheta null_theta({1.0, 1.0}, std::move(eyes));
  const Eigen::MatrixXd g0 = information_matrix(null_theta);
  CHECK(max_abs(g0 - Eigen::MatrixXd::Identity(6, 6)) < 1e-12);
  const Eigen::MatrixXd bracket0 =
      g0.inverse() -
      w * (w.transpose() * g0 * w).ldlt().solve(w.transpose());
  CHECK(max_abs(bracket0 * w) < 1e-10);
}

TEST_CASE("homogeneity tests hold their size and null law") {
  // Null data: both samples standard Gaussian. Sizes of all three tests at
  // level 0.05, plus the null quantiles of the covariance statistic.
  const int reps = 10000;
  const int ni = 1000;
  Rng rng(3011u);
  int reject_scale = 0, reject_shape = 0, reject_cov = 0;
  std::vector<double> q_cov;
  q_cov.reserve(reps);
  const double cut_scale = statfn::chi2_quantile(0.95, 1.0);
  const double cut_shape = statfn::chi2_quantile(0.95, 2.0);
  const double cut_cov = statfn::chi2_quantile(0.95, 3.0);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  for (int rep = 0; rep < reps; ++rep) {
    SampleSet set(
        {gaussian_rows(ni, eye, rng), gaussian_rows(ni, eye, rng)});
    const double qs = test_statistic(
        constrained_estimator(set, Constraint::scale), set, Constraint::scale);
    const double qh = test_statistic(
        constrained_estimator(set, Constraint::shape), set, Constraint::shape);
    const double qc = test_statistic(
        constrained_estimator(set, Constraint::cov), set, Constraint::cov);
    if (qs > cut_scale) ++reject_scale;
    if (qh > cut_shape) ++reject_shape;
    if (qc > cut_cov) ++reject_cov;
    q_cov.push_back(qc);
  }
  const double se = std::sqrt(0.05 * 0.95 / reps);
  CHECK(std::abs(reject_scale / double(reps) - 0.05) < 3.0 * se);
  CHECK(std::abs(reject_shape / double(reps) - 0.05) < 3.0 * se);
  CHECK(std::abs(reject_cov / double(reps) - 0.05) < 3.0 * se);

  for (double level : {0.5, 0.9, 0.95}) {
    const double cut = statfn::chi2_quantile(level, 3.0);
    int below = 0;
    for (double q : q_cov) {
      if (q <= cut) ++below;
    }
    const double se_level = std::sqrt(level * (1.0 - level) / reps);
    CHECK(std::abs(below / double(reps) - level) < 3.0 * se_level);
  }
}

TEST_CASE("homogeneity tests see a fixed alternative") {
  const int reps = 200;
  const int ni = 2000;
  Rng rng(3012u);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd twice = 2.0 * eye;
  const double cut = statfn::chi2_quantile(0.95, 3.0);
  int rejections = 0;
  for (int rep = 0; rep < reps; ++rep) {
    SampleSet set(
        {gaussian_rows(ni, eye, rng), gaussian_rows(ni, twice, rng)});
    const double q = test_statistic(
        constrained_estimator(set, Constraint::cov), set, Constraint::cov);
    if (q > cut) ++rejections;
  }
  CHECK(rejections >= 0.99 * reps);
}

TEST_CASE("pretest estimator picks a side") {
  Rng rng(3013u);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);

  // far from homogeneity the pretest must keep the unpooled fit
  SampleSet loud({gaussian_rows(500, eye, rng),
                  gaussian_rows(500, 4.0 * eye, rng)});
  const MultiCovTheta u = unconstrained_estimator(loud);
  const MultiCovTheta pte = pte_estimator(loud, Constraint::cov, 0.05);
  CHECK(max_abs(pte.flatten() - u.flatten()) == 0.0);

  // level one always keeps it, even on null data
  SampleSet quiet({gaussian_rows(200, eye, rng),
                   gaussian_rows(200, eye, rng)});
  const MultiCovTheta u2 = unconstrained_estimator(quiet);
  CHECK(max_abs(pte_estimator(quiet, Constraint::cov, 1.0).flatten() -
                u2.flatten()) == 0.0);

  // on null data with a tiny level the pooled fit wins almost always
  const int reps = 1000;
  const double alpha = 0.01;
  int pooled = 0;
  for (int rep = 0; rep < reps; ++rep) {
    SampleSet set({gaussian_rows(400, eye, rng),
                   gaussian_rows(400, eye, rng)});
    const MultiCovTheta c = constrained_estimator(set, Constraint::cov);
    const MultiCovTheta got = pte_estimator(set, Constraint::cov, alpha);
    if (max_abs(got.flatten() - c.flatten()) == 0.0) ++pooled;
  }
  const double se = std::sqrt(alpha * (1.0 - alpha) / reps);
  CHECK(pooled / double(reps) >= 1.0 - alpha - 3.0 * se);
}

TEST_CASE("simulation-grid covariance") {
  const long n = 4000;
  const SymPdMatrix s0 = sigma_ell(0, n);
  CHECK(max_abs(s0.mat() - Eigen::MatrixXd::Identity(2, 2)) < 1e-14);

  double last_off = -1.0;
  for (int ell = 0; ell <= 9; ++ell) {
    const SymPdMatrix s = sigma_ell(ell, n);
    auto [scale, shape] = decompose_cov(s);
    CHECK(scale == doctest::Approx(std::exp(ell / 400.0)).epsilon(1e-12));
    CHECK(shape.mat()(0, 1) > last_off);
    last_off = shape.mat()(0, 1);
  }
  CHECK_THROWS_AS(sigma_ell(40, 100), domain_error);
  CHECK_THROWS_AS(sigma_ell(-1, 100), domain_error);
}
