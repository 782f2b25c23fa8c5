// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#pragma once

#include <cstdint>
#include <vector>

#include "isacma/types.hpp"

namespace isacma {

/// Physical configuration of one experiment. All quantities are linear units.
struct Scenario {
  int n_tx = 4;                 ///< transmit antennas
  int n_rx = 5;                 ///< receive antennas (mono-static echo array)
  int n_users = 4;              ///< single-antenna downlink users
  int n_targets = 1;            ///< point targets
  double power_budget = 0.1;    ///< watts (20 dBm)
  double comm_noise = 1e-3;     ///< watts (0 dBm)
  double sense_noise = 1e-3;    ///< watts (0 dBm)
  int cpi_length = 1024;        ///< symbols per coherent processing interval
  double carrier_freq = 3e9;    ///< Hz
  double symbol_period = 1e-6;  ///< seconds
  double amp_efficiency = 1.0;  ///< power amplifier efficiency in (0, 1]
  double circuit_power = 0.0;   ///< watts

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;

  double per_antenna_power() const { return power_budget / n_tx; }
};

struct Target {
  double angle = 0.0;       ///< radians from broadside, in (-pi/2, pi/2)
  cd reflection{1.0, 0.0};  ///< complex reflection coefficient
  double velocity = 0.0;    ///< m/s, radial
};

/// Targets together with the carrier needed to turn velocities into Doppler.
/// Parameter ordering for Fisher information is
/// (angles..., Re(reflection)..., Im(reflection)..., doppler...).
class TargetSet {
 public:
  TargetSet() = default;
  TargetSet(std::vector<Target> targets, double carrier_freq);

  int size() const { return static_cast<int>(targets_.size()); }
  bool empty() const { return targets_.empty(); }
  const Target& operator[](int q) const { return targets_[static_cast<std::size_t>(q)]; }
  const std::vector<Target>& targets() const { return targets_; }
  double carrier_freq() const { return carrier_freq_; }
  double doppler(int q) const { return dopplers_[static_cast<std::size_t>(q)]; }

  /// Flattened parameter vector in Fisher ordering.
  RVec parameter_vector() const;
  /// Inverse of parameter_vector (velocities are recomputed from Doppler).
  TargetSet with_parameters(const RVec& xi) const;

 private:
  std::vector<Target> targets_;
  std::vector<double> dopplers_;
  double carrier_freq_ = 3e9;
};

/// Downlink channels; row k holds h_k^T so that h_k^H x = row(k).conjugate() * x.
struct ChannelSet {
  CMat h;  ///< K x N_T

  int n_users() const { return static_cast<int>(h.rows()); }
  int n_tx() const { return static_cast<int>(h.cols()); }
  /// Column vector h_k.
  CVec user(int k) const { return h.row(k).transpose(); }
};

/// Half-wavelength ULA response; entry m is exp(j*pi*m*sin(angle)).
CVec steering_vector(double angle, int n_elements);
/// Derivative of steering_vector with respect to the angle.
CVec steering_derivative(double angle, int n_elements);

/// i.i.d. CN(0,1) Rayleigh channels, a pure function of (seed, scenario shape).
ChannelSet sample_channels(std::uint64_t seed, const Scenario& scenario);

double doppler_frequency(double velocity, double carrier_freq);

/// Catalogue of seven reference targets (1-based ids in the public API).
Target catalog_target(int id);
TargetSet catalog_targets(const std::vector<int>& ids, double carrier_freq);

}  // namespace isacma
