// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#pragma once

#include <optional>
#include <vector>

#include "isacma/scenario.hpp"

namespace isacma {

/// Real symmetric Fisher information over (angles, Re alpha, Im alpha, doppler),
/// each group of length Q.
struct FisherMatrix {
  RMat f;
  int symbol_count = 0;
  CMat covariance;

  int dim() const { return static_cast<int>(f.rows()); }
};

class SingularFim : public std::runtime_error {
 public:
  SingularFim(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

struct SenseReport {
  RMat crb;
  RVec rcrb;
  double trace_crb = 0.0;
  double avg_trace_crb = 0.0;
  double radar_snr = std::numeric_limits<double>::quiet_NaN();
  double min_eigenvalue = 0.0;
  double condition = 0.0;  ///< condition number of the diagonally equilibrated FIM
};

/// d(G_q(i))/d(xi_p) for every parameter p, G_q(i) = alpha_q e^{j 2 pi F_Dq i T} b a^T.
/// Symbol indices run from 1.
std::vector<CMat> echo_derivatives(const TargetSet& targets, const Scenario& scenario, int symbol_index);

/// Sum over targets of G_q(i): the noiseless echo response at symbol i.
CMat echo_response(const TargetSet& targets, const Scenario& scenario, int symbol_index);

/// The FIM as a linear map of the transmit covariance:
///   F_pq(R) = Re tr(M_pq R),  M_pq = (2/sigma_r^2) sum_i D_p(i)^H D_q(i).
class FimOperator {
 public:
  FimOperator(const TargetSet& targets, const Scenario& scenario, int symbol_count);

  int dim() const { return dim_; }
  int n_tx() const { return n_tx_; }
  int symbol_count() const { return symbol_count_; }
  /// M_pq for p, q in [0, dim).
  const CMat& kernel(int p, int q) const { return kernels_[static_cast<std::size_t>(p * dim_ + q)]; }
  RMat apply(const CMat& covariance) const;

 private:
  int dim_ = 0;
  int n_tx_ = 0;
  int symbol_count_ = 0;
  std::vector<CMat> kernels_;
};

/// Covariance-form FIM. Throws std::domain_error if R_X is not PSD within tolerance.
FisherMatrix fim(const CMat& covariance, const TargetSet& targets, const Scenario& scenario,
                 int symbol_count);

FisherMatrix bayesian_fim(const FisherMatrix& fim, const std::optional<RMat>& prior_fim);

SenseReport sense_report(const FisherMatrix& fim, double condition_cap = 1e12);
SenseReport sense_report(const FisherMatrix& fim, const TargetSet& targets, const Scenario& scenario,
                         double condition_cap = 1e12);

/// Expected E||H_r X||_F^2 / (I sigma_r^2) under E[x x^H] = R_X, with per-symbol
/// Doppler phases summed directly.
double radar_snr(const CMat& covariance, const TargetSet& targets, const Scenario& scenario);

/// Single-target radar mutual information in bits (rank-one closed form).
double radar_mi(const CMat& covariance, const TargetSet& targets, const Scenario& scenario);

/// a^T(theta) R_X a*(theta).
double beampattern_gain(const CMat& covariance, double angle);

double beampattern_mse(const CMat& covariance, const RVec& desired, const RVec& grid);

double estimator_mse(const RVec& estimate, const RVec& truth);
double estimator_mse(const std::vector<RVec>& estimates, const RVec& truth);

/// Throws std::domain_error unless `covariance` is Hermitian PSD within
/// 1e-9 * max(1, tr).
void require_psd(const CMat& covariance);

}  // namespace isacma
