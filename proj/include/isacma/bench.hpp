// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isacma/optimizer.hpp"

namespace isacma {

enum class IsacMode {
  NoIsac,  ///< joint precoder design traced by phi
  OIsac,   ///< time split: fraction rho communicates, 1 - rho senses
};

std::string_view to_string(IsacMode m);

struct SweepConfig {
  std::string figure_id = "custom";
  Scenario scenario;
  std::vector<std::vector<int>> rosters{{1}};  ///< catalog target ids, one sweep per roster
  std::vector<Scheme> schemes{Scheme::Sdma, Scheme::Noma, Scheme::Rsma};
  std::vector<IsacMode> modes{IsacMode::NoIsac};
  std::vector<double> phi_grid;   ///< NO-ISAC scalarization weights, ascending
  std::vector<double> rho_grid;   ///< O-ISAC communication fractions in [0, 1]
  int trials = 100;
  std::uint64_t master_seed = 1;
  CommObjective objective = CommObjective::Mfr;
  RVec weights;                   ///< WSR weights (length K)
  RadarSequenceMode radar;
  SolveOptions solver;
  /// Replacement for the first catalog entries (id 1 = catalog[0]); empty keeps the built-in list.
  std::vector<Target> catalog;

  void validate() const;
  /// Scenario with n_targets matched to one roster.
  Scenario scenario_for(const std::vector<int>& roster) const;
  /// Targets of one roster, honouring catalog replacements.
  TargetSet targets_for(const std::vector<int>& roster) const;
};

std::vector<double> default_phi_grid();
std::vector<double> default_rho_grid();

/// One trial's contribution to a grid point.
struct TrialSample {
  int trial = 0;
  bool success = false;
  bool sensing_present = false;
  double comm = 0.0;
  double t_value = 0.0;
  double trace_crb = 0.0;
  double avg_trace_crb = 0.0;
  RVec rcrb_mean;  ///< per parameter kind (theta, alpha_re, alpha_im, doppler), averaged over targets
  std::string error;
};

struct TradeoffPoint {
  double phi = std::numeric_limits<double>::quiet_NaN();  ///< NaN for O-ISAC points
  double rho = std::numeric_limits<double>::quiet_NaN();  ///< NaN for NO-ISAC points
  int trials = 0;
  int successes = 0;
  bool sensing_present = false;
  double comm_mean = 0.0;
  double comm_stderr = 0.0;
  double trace_crb_mean = 0.0;
  double avg_trace_crb_mean = 0.0;
  RVec rcrb_mean = RVec::Zero(4);
  std::vector<TrialSample> samples;  ///< indexed by trial
};

struct TradeoffCurve {
  std::string figure_id;
  Scheme scheme = Scheme::Sdma;
  IsacMode mode = IsacMode::NoIsac;
  std::string comm_metric_name;
  std::uint64_t master_seed = 0;
  std::vector<int> roster;
  std::vector<TradeoffPoint> points;
};

struct SweepResult {
  std::vector<TradeoffCurve> curves;
  /// True when some grid point ended with zero successful trials.
  bool has_empty_point() const;
};

/// Known ids: fig6, fig7, fig8, fig9, fig10.
SweepConfig preset(const std::string& figure_id);
std::vector<std::string> preset_ids();

/// Recomputes a point's means from its samples, skipping failed trials.
void aggregate(TradeoffPoint& point);

/// Worker count: hardware concurrency capped by ISAC_MA_THREADS when set.
int worker_count(int tasks);

SweepResult run_sweep(const SweepConfig& config);

enum class OutputFormat { Csv, Json, Svg };

/// Writes curves to path; I/O failures throw std::runtime_error.
void emit_results(const std::vector<TradeoffCurve>& curves, const std::string& path, OutputFormat format);
std::string format_csv(const std::vector<TradeoffCurve>& curves);
std::string format_svg(const std::vector<TradeoffCurve>& curves);

}  // namespace isacma
