// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include "isacma/scenario.hpp"

#include <array>
#include <cmath>

#include "isacma/rng.hpp"

namespace isacma {

namespace {

void check_angle(double angle) {
  if (!(angle > -kPi / 2 && angle < kPi / 2)) {
    throw std::domain_error("steering angle must lie in the open interval (-pi/2, pi/2)");
  }
}

void check_elements(int n_elements) {
  if (n_elements < 1) throw std::domain_error("array needs at least one element");
}

}  // namespace

void Scenario::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid scenario: ") + what);
  };
  require(n_tx >= 1, "n_tx must be >= 1");
  require(n_rx >= 1, "n_rx must be >= 1");
  require(n_users >= 0, "n_users must be >= 0");
  require(n_targets >= 0, "n_targets must be >= 0");
  require(power_budget > 0, "power_budget must be > 0");
  require(comm_noise > 0, "comm_noise must be > 0");
  require(sense_noise > 0, "sense_noise must be > 0");
  require(cpi_length >= 1, "cpi_length must be >= 1");
  require(carrier_freq > 0, "carrier_freq must be > 0");
  require(symbol_period > 0, "symbol_period must be > 0");
  require(amp_efficiency > 0 && amp_efficiency <= 1, "amp_efficiency must be in (0, 1]");
  require(circuit_power >= 0, "circuit_power must be >= 0");
}

TargetSet::TargetSet(std::vector<Target> targets, double carrier_freq)
    : targets_(std::move(targets)), carrier_freq_(carrier_freq) {
  if (!(carrier_freq_ > 0)) throw std::invalid_argument("carrier frequency must be positive");
  dopplers_.reserve(targets_.size());
  for (const auto& t : targets_) {
    check_angle(t.angle);
    if (!std::isfinite(t.reflection.real()) || !std::isfinite(t.reflection.imag())) {
      throw std::invalid_argument("reflection coefficient must be finite");
    }
    dopplers_.push_back(doppler_frequency(t.velocity, carrier_freq_));
  }
}

RVec TargetSet::parameter_vector() const {
  const int q = size();
  RVec xi(4 * q);
  for (int i = 0; i < q; ++i) {
    xi(i) = targets_[static_cast<std::size_t>(i)].angle;
    xi(q + i) = targets_[static_cast<std::size_t>(i)].reflection.real();
    xi(2 * q + i) = targets_[static_cast<std::size_t>(i)].reflection.imag();
    xi(3 * q + i) = dopplers_[static_cast<std::size_t>(i)];
  }
  return xi;
}

TargetSet TargetSet::with_parameters(const RVec& xi) const {
  const int q = size();
  if (xi.size() != 4 * q) throw StructuralError("parameter vector length must be 4Q");
  std::vector<Target> out(targets_.size());
  for (int i = 0; i < q; ++i) {
    auto& t = out[static_cast<std::size_t>(i)];
    t.angle = xi(i);
    t.reflection = cd(xi(q + i), xi(2 * q + i));
    t.velocity = xi(3 * q + i) * kSpeedOfLight / (2.0 * carrier_freq_);
  }
  return TargetSet(std::move(out), carrier_freq_);
}

CVec steering_vector(double angle, int n_elements) {
  check_angle(angle);
  check_elements(n_elements);
  CVec a(n_elements);
  const double phase = kPi * std::sin(angle);
  for (int m = 0; m < n_elements; ++m) a(m) = std::polar(1.0, phase * m);
  return a;
}

CVec steering_derivative(double angle, int n_elements) {
  check_angle(angle);
  check_elements(n_elements);
  CVec d(n_elements);
  const double phase = kPi * std::sin(angle);
  const double slope = kPi * std::cos(angle);
  for (int m = 0; m < n_elements; ++m) {
    d(m) = cd(0.0, slope * m) * std::polar(1.0, phase * m);
  }
  return d;
}

ChannelSet sample_channels(std::uint64_t seed, const Scenario& scenario) {
  Rng rng(seed);
  ChannelSet ch;
  ch.h.resize(scenario.n_users, scenario.n_tx);
  const double scale = std::sqrt(0.5);
  for (int k = 0; k < scenario.n_users; ++k) {
    for (int n = 0; n < scenario.n_tx; ++n) {
      const double re = rng.normal();
      const double im = rng.normal();
      ch.h(k, n) = cd(scale * re, scale * im);
    }
  }
  return ch;
}

double doppler_frequency(double velocity, double carrier_freq) {
  return 2.0 * velocity * carrier_freq / kSpeedOfLight;
}

Target catalog_target(int id) {
  static constexpr std::array<double, 7> kAnglesDeg{45, 0, 34, 18, 9, 30, 15};
  static constexpr std::array<double, 7> kVelocities{10, 10, 10, 10, 10, 14, 18};
  if (id < 1 || id > 7) throw std::invalid_argument("catalogue target ids run from 1 to 7");
  const auto i = static_cast<std::size_t>(id - 1);
  return Target{deg_to_rad(kAnglesDeg[i]), cd(1.0, 0.0), kVelocities[i]};
}

TargetSet catalog_targets(const std::vector<int>& ids, double carrier_freq) {
  std::vector<Target> ts;
  ts.reserve(ids.size());
  for (int id : ids) ts.push_back(catalog_target(id));
  return TargetSet(std::move(ts), carrier_freq);
}

}  // namespace isacma
