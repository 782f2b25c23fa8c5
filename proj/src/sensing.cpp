// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include "isacma/sensing.hpp"

#include <cmath>

namespace isacma {

namespace {

// Per-target geometry shared by the derivative and response builders.
struct TargetGeometry {
  CMat response;    // b a^T
  CMat d_response;  // d(b a^T)/d theta
  cd alpha;
  double omega;     // 2 pi F_D T
};

std::vector<TargetGeometry> geometry(const TargetSet& targets, const Scenario& scenario) {
  std::vector<TargetGeometry> out;
  out.reserve(static_cast<std::size_t>(targets.size()));
  for (int q = 0; q < targets.size(); ++q) {
    const double theta = targets[q].angle;
    const CVec a = steering_vector(theta, scenario.n_tx);
    const CVec da = steering_derivative(theta, scenario.n_tx);
    const CVec b = steering_vector(theta, scenario.n_rx);
    const CVec db = steering_derivative(theta, scenario.n_rx);
    out.push_back({b * a.transpose(), db * a.transpose() + b * da.transpose(), targets[q].reflection,
                   2.0 * kPi * targets.doppler(q) * scenario.symbol_period});
  }
  return out;
}

// D_p(i) = coef_p(i) * basis_p. Fills the scalar coefficients for symbol i.
void derivative_coefficients(const std::vector<TargetGeometry>& geo, double period, int i,
                             std::vector<cd>& coef) {
  const auto q_count = geo.size();
  coef.resize(4 * q_count);
  for (std::size_t q = 0; q < q_count; ++q) {
    const cd phase = std::polar(1.0, geo[q].omega * i);
    coef[q] = geo[q].alpha * phase;
    coef[q_count + q] = phase;
    coef[2 * q_count + q] = cd(0.0, 1.0) * phase;
    coef[3 * q_count + q] = cd(0.0, 2.0 * kPi * i * period) * geo[q].alpha * phase;
  }
}

const CMat& derivative_basis(const std::vector<TargetGeometry>& geo, std::size_t p) {
  const auto q_count = geo.size();
  const auto q = p % q_count;
  return p < q_count ? geo[q].d_response : geo[q].response;
}

}  // namespace

std::vector<CMat> echo_derivatives(const TargetSet& targets, const Scenario& scenario, int symbol_index) {
  const auto geo = geometry(targets, scenario);
  std::vector<cd> coef;
  derivative_coefficients(geo, scenario.symbol_period, symbol_index, coef);
  std::vector<CMat> out;
  out.reserve(coef.size());
  for (std::size_t p = 0; p < coef.size(); ++p) out.push_back(coef[p] * derivative_basis(geo, p));
  return out;
}

CMat echo_response(const TargetSet& targets, const Scenario& scenario, int symbol_index) {
  CMat h = CMat::Zero(scenario.n_rx, scenario.n_tx);
  for (const auto& g : geometry(targets, scenario)) {
    h += g.alpha * std::polar(1.0, g.omega * symbol_index) * g.response;
  }
  return h;
}

FimOperator::FimOperator(const TargetSet& targets, const Scenario& scenario, int symbol_count)
    : dim_(4 * targets.size()), n_tx_(scenario.n_tx), symbol_count_(symbol_count) {
  if (symbol_count < 1) throw std::invalid_argument("symbol count must be >= 1");
  const auto geo = geometry(targets, scenario);
  const auto d = static_cast<std::size_t>(dim_);
  // Time correlation of the scalar coefficients, summed directly over the CPI.
  CMat corr = CMat::Zero(dim_, dim_);
  std::vector<cd> coef;
  for (int i = 1; i <= symbol_count; ++i) {
    derivative_coefficients(geo, scenario.symbol_period, i, coef);
    for (std::size_t p = 0; p < d; ++p) {
      const cd cp = std::conj(coef[p]);
      for (std::size_t q = 0; q < d; ++q) corr(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) += cp * coef[q];
    }
  }
  const double scale = 2.0 / scenario.sense_noise;
  kernels_.resize(d * d);
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t q = 0; q < d; ++q) {
      kernels_[p * d + q] = (scale * corr(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q))) *
                            (derivative_basis(geo, p).adjoint() * derivative_basis(geo, q));
    }
  }
}

RMat FimOperator::apply(const CMat& covariance) const {
  if (covariance.rows() != n_tx_ || covariance.cols() != n_tx_) {
    throw StructuralError("covariance must be N_T x N_T");
  }
  RMat f(dim_, dim_);
  const CMat rt = covariance.transpose();
  for (int p = 0; p < dim_; ++p) {
    for (int q = p; q < dim_; ++q) {
      const double v = 0.5 * (kernel(p, q).cwiseProduct(rt).sum().real() +
                              kernel(q, p).cwiseProduct(rt).sum().real());
      f(p, q) = v;
      f(q, p) = v;
    }
  }
  return f;
}

void require_psd(const CMat& covariance) {
  if (covariance.rows() != covariance.cols()) throw StructuralError("covariance must be square");
  if (covariance.size() == 0) return;
  const double scale = std::max(covariance.cwiseAbs().maxCoeff(), std::abs(covariance.trace().real()));
  if ((covariance - covariance.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale + 1e-300) {
    throw std::domain_error("covariance is not Hermitian");
  }
  const CMat herm = 0.5 * (covariance + covariance.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> eig(herm, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw std::domain_error("covariance is not positive semidefinite");
  }
}

FisherMatrix fim(const CMat& covariance, const TargetSet& targets, const Scenario& scenario,
                 int symbol_count) {
  require_psd(covariance);
  FimOperator op(targets, scenario, symbol_count);
  return FisherMatrix{op.apply(covariance), symbol_count, covariance};
}

FisherMatrix bayesian_fim(const FisherMatrix& fim, const std::optional<RMat>& prior_fim) {
  if (!prior_fim) return fim;
  if (prior_fim->rows() != fim.f.rows() || prior_fim->cols() != fim.f.cols()) {
    throw StructuralError("prior information must match the FIM dimension");
  }
  FisherMatrix out = fim;
  out.f += *prior_fim;
  return out;
}

SenseReport sense_report(const FisherMatrix& fim, double condition_cap) {
  const RMat& f = fim.f;
  const Eigen::Index n = f.rows();
  if (n == 0 || f.cols() != n) throw StructuralError("FIM must be square and nonempty");
  const RVec diag = f.diagonal();
  if ((diag.array() <= 0).any()) {
    Eigen::SelfAdjointEigenSolver<RMat> raw(f, Eigen::EigenvaluesOnly);
    throw SingularFim("FIM has a non-positive diagonal entry (unidentifiable parameter)",
                      raw.eigenvalues().minCoeff());
  }
  // Equilibrate so that mixed units (radians vs Hz) do not dominate the test.
  const RVec inv_sqrt = diag.cwiseSqrt().cwiseInverse();
  const RMat scaled = inv_sqrt.asDiagonal() * f * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<RMat> eig(0.5 * (scaled + scaled.transpose()));
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  Eigen::SelfAdjointEigenSolver<RMat> raw(f, Eigen::EigenvaluesOnly);
  if (!(lo > 0) || hi / lo > condition_cap) {
    throw SingularFim("FIM is singular or ill-conditioned", raw.eigenvalues().minCoeff());
  }
  const RMat inv_scaled =
      eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  SenseReport r;
  r.crb = inv_sqrt.asDiagonal() * inv_scaled * inv_sqrt.asDiagonal();
  r.crb = 0.5 * (r.crb + r.crb.transpose()).eval();
  r.rcrb = r.crb.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.trace_crb = r.crb.trace();
  const double q = static_cast<double>(n) / 4.0;
  r.avg_trace_crb = r.trace_crb / std::max(q, 1.0);
  r.min_eigenvalue = raw.eigenvalues().minCoeff();
  r.condition = hi / lo;
  return r;
}

SenseReport sense_report(const FisherMatrix& fim, const TargetSet& targets, const Scenario& scenario,
                         double condition_cap) {
  SenseReport r = sense_report(fim, condition_cap);
  r.radar_snr = radar_snr(fim.covariance, targets, scenario);
  return r;
}

double radar_snr(const CMat& covariance, const TargetSet& targets, const Scenario& scenario) {
  require_psd(covariance);
  const auto geo = geometry(targets, scenario);
  const auto q_count = geo.size();
  // cross(p, q) = tr(B_q R B_p^H); the per-symbol power is sum conj(c_p) c_q cross(p, q).
  CMat cross(static_cast<Eigen::Index>(q_count), static_cast<Eigen::Index>(q_count));
  for (std::size_t p = 0; p < q_count; ++p) {
    for (std::size_t q = 0; q < q_count; ++q) {
      cross(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
          (geo[q].response * covariance * geo[p].response.adjoint()).trace();
    }
  }
  double total = 0.0;
  const int symbols = scenario.cpi_length;
  for (int i = 1; i <= symbols; ++i) {
    cd acc = 0.0;
    for (std::size_t p = 0; p < q_count; ++p) {
      const cd cp = std::conj(geo[p].alpha * std::polar(1.0, geo[p].omega * i));
      for (std::size_t q = 0; q < q_count; ++q) {
        acc += cp * geo[q].alpha * std::polar(1.0, geo[q].omega * i) *
               cross(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
      }
    }
    total += acc.real();
  }
  return total / (symbols * scenario.sense_noise);
}

double radar_mi(const CMat& covariance, const TargetSet& targets, const Scenario& scenario) {
  if (targets.size() != 1) throw UnsupportedConfiguration("radar MI closed form needs exactly one target");
  require_psd(covariance);
  const double g = beampattern_gain(covariance, targets[0].angle);
  return std::log2(1.0 + std::norm(targets[0].reflection) * scenario.n_rx * g / scenario.sense_noise);
}

double beampattern_gain(const CMat& covariance, double angle) {
  const CVec a = steering_vector(angle, static_cast<int>(covariance.rows()));
  return std::max(0.0, (a.transpose() * covariance * a.conjugate()).value().real());
}

double beampattern_mse(const CMat& covariance, const RVec& desired, const RVec& grid) {
  if (desired.size() != grid.size()) throw StructuralError("desired pattern and grid lengths differ");
  for (Eigen::Index j = 1; j < grid.size(); ++j) {
    if (!(grid(j) > grid(j - 1))) throw std::invalid_argument("angle grid must be strictly increasing");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    const double e = desired(j) - beampattern_gain(covariance, grid(j));
    total += e * e;
  }
  return total;
}

double estimator_mse(const RVec& estimate, const RVec& truth) {
  if (estimate.size() != truth.size()) throw StructuralError("estimate and truth lengths differ");
  return (estimate - truth).squaredNorm();
}

double estimator_mse(const std::vector<RVec>& estimates, const RVec& truth) {
  if (estimates.empty()) throw std::invalid_argument("need at least one trial");
  double total = 0.0;
  for (const auto& e : estimates) total += estimator_mse(e, truth);
  return total / static_cast<double>(estimates.size());
}

}  // namespace isacma
