// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "isacma/scenario.hpp"

namespace isacma {

enum class Scheme { Tdma, Sdma, Noma, Rsma };

enum class RadarMode {
  Disabled,        ///< no dedicated radar sequence, W_r = 0
  EnabledWithSic,  ///< radar sequence cancelled by users before decoding
  EnabledNoSic,    ///< radar sequence treated as interference
};

std::string_view to_string(Scheme s);
std::string_view to_string(RadarMode m);
Scheme parse_scheme(std::string_view text);
RadarMode parse_radar_mode(std::string_view text);

/// 1 when users see the radar sequence as interference.
inline int radar_interference_flag(RadarMode m) { return m == RadarMode::EnabledNoSic ? 1 : 0; }

/// Radar-sequence configuration: the mode plus its power P_r.
struct RadarSequenceMode {
  RadarMode kind = RadarMode::Disabled;
  double radar_power = 0.0;

  int eta() const { return radar_interference_flag(kind); }
  void validate() const;
};

enum class CommObjective { Wsr, Mfr };

struct PrecoderSet {
  Scheme scheme = Scheme::Sdma;
  RadarMode radar_mode = RadarMode::Disabled;
  CMat radar;                    ///< N_T x N_T, all-zero when disabled
  CVec common;                   ///< N_T, RSMA only (empty otherwise)
  CMat users;                    ///< N_T x K, column k is w_k (private precoder for RSMA)
  std::vector<int> decode_order; ///< NOMA: decode_order[0] is decoded first
  RVec common_alloc;             ///< RSMA: C_k >= 0

  int n_tx() const { return static_cast<int>(users.rows()); }
  int n_users() const { return static_cast<int>(users.cols()); }
  double radar_power() const { return radar.size() == 0 ? 0.0 : radar.squaredNorm(); }

  /// [W_r, w_c, w_1..w_K] restricted to the blocks that exist for this scheme/mode.
  CMat stacked() const;
  /// Transmit covariance W W^H.
  CMat covariance() const;
  /// Checks shapes and the mode/scheme invariants against a channel set.
  void validate(const ChannelSet& channels) const;
};

struct RateReport {
  RVec sinr;          ///< SINR that determines each user's (private) rate
  RVec rates;         ///< R_k in bits/s/Hz
  RVec common_sinr;   ///< RSMA: gamma_{c,k}
  RVec private_rates; ///< RSMA: R_{p,k}
  double common_rate = 0.0;  ///< RSMA: R_c
  bool common_feasible = true;  ///< RSMA: sum C_k <= R_c

  int n_users() const { return static_cast<int>(rates.size()); }
};

struct CommMetrics {
  double wsr = 0.0;
  double mfr = 0.0;
  double ee = 0.0;
};

RVec sinr_sdma(const ChannelSet& channels, const PrecoderSet& precoders, double noise);
RateReport rates_sdma(const ChannelSet& channels, const PrecoderSet& precoders, double noise);

/// gamma(t, k): SINR of the stream at decode position k, seen by the user at
/// position t (valid for t >= k; other entries are NaN).
RMat noma_sinr_matrix(const ChannelSet& channels, const PrecoderSet& precoders, double noise);
RateReport rates_noma(const ChannelSet& channels, const PrecoderSet& precoders, double noise);

RateReport rates_rsma(const ChannelSet& channels, const PrecoderSet& precoders, double noise);

/// Time-shared baseline: a fraction rho of the frame is split evenly across users,
/// each served alone with phase-aligned full per-antenna power.
RateReport rates_tdma(const ChannelSet& channels, const Scenario& scenario, double comm_fraction);

/// Dispatches on precoders.scheme (TDMA is not precoder based and is rejected).
RateReport evaluate_rates(const ChannelSet& channels, const PrecoderSet& precoders, double noise);

CommMetrics comm_metrics(const RateReport& rates, const RVec& weights, const Scenario& scenario);
double comm_value(const RateReport& rates, CommObjective objective, const RVec& weights);

/// Users sorted by ascending channel norm, ties broken by index.
std::vector<int> default_decode_order(const ChannelSet& channels);

/// Best split of the common rate across users for the given objective: MFR
/// water-fills the weakest private rates, WSR hands everything to the largest
/// weight (lowest index on ties).
RVec optimal_common_allocation(double common_rate, const RVec& private_rates,
                               CommObjective objective, const RVec& weights);

}  // namespace isacma
