#pragma once

// Finite-difference Fisher information oracle for zero-mean Gaussian
// covariance families parametrized by (scale, shape coordinates). The
// expected log-likelihood under the truth is known in closed form,
//   E[l(x)] = -1/2 [ k log sigma'^2 + log det W(eta')
//                    + (sigma^2/sigma'^2) tr(W(eta')^{-1} V) ] + const,
// so the information matrix is its negated Hessian, computed here with
// central differences. Independent of the library's structural-matrix chain:
// only the coordinate embedding below and Eigen primitives are used.

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>

namespace testsup {

// Unit-determinant symmetric matrix from coordinates that omit the (1,1)
// entry (column-major lower triangle). The determinant is linear in the
// missing entry, so two evaluations pin it down.
inline Eigen::MatrixXd shape_embed_fd(const Eigen::VectorXd& u, int k) {
  Eigen::MatrixXd w(k, k);
  auto fill = [&](double v11) {
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
  };
  fill(0.0);
  const double d0 = w.determinant();
  fill(1.0);
  const double slope = w.determinant() - d0;
  fill((1.0 - d0) / slope);
  return w;
}

inline Eigen::MatrixXd hessian_fd(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd hess(n, n);
  const double f0 = f(x);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    hess(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp(i) += h; xpp(j) += h;
      xpm(i) += h; xpm(j) -= h;
      xmp(i) -= h; xmp(j) += h;
      xmm(i) -= h; xmm(j) -= h;
      hess(i, j) = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
      hess(j, i) = hess(i, j);
    }
  }
  return hess;
}

// Per-observation Fisher information of one sample in coordinates
// (sigma^2, vech-without-(1,1) of V), at truth (sigma_sq, v).
inline Eigen::MatrixXd gaussian_cov_fisher_fd(double sigma_sq,
                                              const Eigen::MatrixXd& v,
                                              double h = 4e-4) {
  const int k = static_cast<int>(v.rows());
  const int d = k * (k + 1) / 2 - 1;
  Eigen::VectorXd x0(1 + d);
  x0(0) = sigma_sq;
  {
    int idx = 1;
    for (int j = 0; j < k; ++j) {
      for (int i = j; i < k; ++i) {
        if (i == 0 && j == 0) continue;
        x0(idx++) = v(i, j);
      }
    }
  }
  auto neg_expected_ll = [&](const Eigen::VectorXd& x) {
    const double s2 = x(0);
    const Eigen::MatrixXd w = shape_embed_fd(x.tail(d), k);
    const double logdet = std::log(w.determinant());
    const double tr = (w.inverse() * v).trace();
    return 0.5 * (k * std::log(s2) + logdet + (sigma_sq / s2) * tr);
  };
  return hessian_fd(neg_expected_ll, x0, h);
}

}  // namespace testsup
