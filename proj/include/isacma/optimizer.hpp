// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isacma/conic.hpp"
#include "isacma/rates.hpp"
#include "isacma/sensing.hpp"

namespace isacma {

enum class PowerConstraint {
  PerAntennaEquality,  ///< diag(W W^H) = P_T / N_T
  TotalPower,          ///< tr(W W^H) = P_T
};

/// Joint communication/sensing design: maximize comm metric + phi * lambda_min(F).
struct DesignProblem {
  Scheme scheme = Scheme::Sdma;
  RadarSequenceMode radar;
  CommObjective objective = CommObjective::Mfr;
  RVec weights;  ///< WSR weights, length K (ignored for MFR)
  double phi = 0.0;
  ChannelSet channels;
  TargetSet targets;
  Scenario scenario;
  PowerConstraint power = PowerConstraint::PerAntennaEquality;

  void validate() const;
};

struct SolveOptions {
  double tol_rel = 1e-4;
  int max_iters = 50;
  conic::SolverOptions conic{1e-8, 1e-8, 1e-8, 100};
  /// RSMA only: also start from the SDMA solution with a silent common stream
  /// and keep the better result.
  bool rsma_sdma_start = true;
};

struct Solution {
  PrecoderSet precoders;
  CMat covariance;             ///< W W^H at the reported point
  double t_value = 0.0;        ///< smallest eigenvalue of F(covariance)
  double comm_value = 0.0;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
  double tightness_gap = 0.0;  ///< ||R_X - W W^H||_F of the last relaxed subproblem, watts
  bool tightness_flagged = false;
  std::vector<double> trace;   ///< exact objective after every accepted step
  RateReport rates;
  bool success = true;         ///< false when a sweep point failed
  std::string error;
};

class InfeasibleSubproblem : public std::runtime_error {
 public:
  InfeasibleSubproblem(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// Thrown by require_converged for callers that treat stalling as an error.
class NotConverged : public std::runtime_error {
 public:
  explicit NotConverged(Solution best)
      : std::runtime_error("SCA did not converge within the iteration budget"), best_(std::move(best)) {}
  const Solution& best() const { return best_; }

 private:
  Solution best_;
};

void require_converged(const Solution& s);

/// Exact objective of a feasible precoder set; fills comm value, t and rates.
double evaluate_design(const DesignProblem& problem, PrecoderSet& precoders, double* comm = nullptr,
                       double* t = nullptr, RateReport* rates = nullptr);

/// Matched-filter starting point, normalized to the power constraint.
PrecoderSet default_initialization(const DesignProblem& problem);

/// RSMA precoders equal to the given SDMA ones with w_c = 0 and C = 0.
PrecoderSet embed_in_rsma(const PrecoderSet& sdma);

Solution solve_sca(const DesignProblem& problem, const std::optional<PrecoderSet>& init = std::nullopt,
                   const SolveOptions& options = {});

struct SensingDesign {
  CMat covariance;
  double t = 0.0;  ///< smallest eigenvalue of F(covariance)
  conic::SolveStatus status = conic::SolveStatus::Optimal;
};

/// max t s.t. F(R_X) >= t I, per-antenna power equality, R_X >= 0.
SensingDesign solve_sensing_only(const Scenario& scenario, const TargetSet& targets, int symbol_count,
                                 const conic::SolverOptions& options = {1e-8, 1e-8, 1e-8, 100});

/// Exhaustive relative-phase search for K = 1, N_T <= 2, Q <= 1 (SDMA or NOMA, no radar sequence).
Solution oracle_grid_search(const DesignProblem& problem, int phase_points = 720);

/// Solves each phi (ascending) warm-started from its neighbour. Failures are recorded per point.
std::vector<Solution> sweep_phi(const DesignProblem& problem, const std::vector<double>& phi_grid,
                                const SolveOptions& options = {});

}  // namespace isacma
