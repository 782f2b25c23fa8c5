// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors
//
// Reference computations used by the tests. Everything here is written from
// the model definitions directly and deliberately avoids calling into the
// library, so that agreement between the two is meaningful.

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kLight = 299792458.0;

inline CVec ula(double angle, int n) {
  CVec v(n);
  for (int m = 0; m < n; ++m) v(m) = std::polar(1.0, kPi * m * std::sin(angle));
  return v;
}

/// Echo matrix sum_q alpha_q exp(j 2 pi f_q i T) b(theta_q) a(theta_q)^T, with
/// the parameters packed as (theta..., Re alpha..., Im alpha..., f_D...).
inline CMat echo(const RVec& xi, int q_count, int n_tx, int n_rx, double period, int i) {
  CMat g = CMat::Zero(n_rx, n_tx);
  for (int q = 0; q < q_count; ++q) {
    const double theta = xi(q);
    const cd alpha(xi(q_count + q), xi(2 * q_count + q));
    const double fd = xi(3 * q_count + q);
    const cd phase = std::polar(1.0, 2.0 * kPi * fd * i * period);
    g += alpha * phase * ula(theta, n_rx) * ula(theta, n_tx).transpose();
  }
  return g;
}

/// Fisher information (2/sigma^2) sum_i Re tr(D_p^H D_q R) with the D_p
/// obtained by central differences of `echo`.
inline RMat finite_difference_fim(const CMat& r, const RVec& xi, int q_count, int n_rx, double noise,
                                  double period, int symbols) {
  const int n_tx = static_cast<int>(r.rows());
  const auto dim = xi.size();
  RMat f = RMat::Zero(dim, dim);
  std::vector<CMat> d(static_cast<std::size_t>(dim));
  for (int i = 1; i <= symbols; ++i) {
    for (Eigen::Index p = 0; p < dim; ++p) {
      const double h = 1e-5 * std::max(1.0, std::abs(xi(p)));
      RVec up = xi, dn = xi;
      up(p) += h;
      dn(p) -= h;
      d[static_cast<std::size_t>(p)] =
          (echo(up, q_count, n_tx, n_rx, period, i) - echo(dn, q_count, n_tx, n_rx, period, i)) / (2 * h);
    }
    for (Eigen::Index p = 0; p < dim; ++p) {
      for (Eigen::Index q = 0; q < dim; ++q) {
        f(p, q) += (d[static_cast<std::size_t>(p)].adjoint() * d[static_cast<std::size_t>(q)] * r).trace().real();
      }
    }
  }
  return f * (2.0 / noise);
}

/// log2 det(I + (|alpha|^2 / sigma^2) b a^T R a^* b^H), via a general LU determinant.
inline double mi_determinant(const CMat& r, double angle, cd alpha, int n_rx, double noise) {
  const int n_tx = static_cast<int>(r.rows());
  const CMat h = alpha * ula(angle, n_rx) * ula(angle, n_tx).transpose();
  const CMat m = CMat::Identity(n_rx, n_rx) + h * r * h.adjoint() / noise;
  return std::log2(std::abs(m.determinant()));
}

/// Interference-as-noise SINR written out with explicit loops.
inline std::vector<double> sdma_sinr(const CMat& h_rows, const CMat& w, const CMat& radar, bool radar_leaks,
                                     double noise) {
  const auto k_users = h_rows.rows();
  std::vector<double> out;
  for (Eigen::Index k = 0; k < k_users; ++k) {
    auto proj = [&](const CMat& m, Eigen::Index c) {
      cd s = 0.0;
      for (Eigen::Index n = 0; n < h_rows.cols(); ++n) s += std::conj(h_rows(k, n)) * m(n, c);
      return std::norm(s);
    };
    double interference = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (j != k) interference += proj(w, j);
    }
    if (radar_leaks) {
      for (Eigen::Index j = 0; j < radar.cols(); ++j) interference += proj(radar, j);
    }
    out.push_back(proj(w, k) / (interference + noise));
  }
  return out;
}

/// Uniformly random PSD matrix with the given trace.
template <typename Rng>
CMat random_covariance(Rng& rng, int n, double trace) {
  CMat a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = cd(rng.normal(), rng.normal());
  CMat r = a * a.adjoint();
  return r * (trace / r.trace().real());
}

/// PSD matrix with prescribed diagonal: D^{1/2} C D^{1/2} with C a random correlation matrix.
template <typename Rng>
CMat random_covariance_with_diag(Rng& rng, int n, double diag_value) {
  CMat r = random_covariance(rng, n, 1.0);
  RVec s = r.diagonal().real().cwiseSqrt().cwiseInverse();
  CMat c = s.asDiagonal() * r * s.asDiagonal();
  return c * diag_value;
}

}  // namespace oracle
