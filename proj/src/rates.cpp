// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include "isacma/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace isacma {

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::Tdma: return "tdma";
    case Scheme::Sdma: return "sdma";
    case Scheme::Noma: return "noma";
    case Scheme::Rsma: return "rsma";
  }
  return "?";
}

std::string_view to_string(RadarMode m) {
  switch (m) {
    case RadarMode::Disabled: return "off";
    case RadarMode::EnabledWithSic: return "sic";
    case RadarMode::EnabledNoSic: return "nosic";
  }
  return "?";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "tdma") return Scheme::Tdma;
  if (text == "sdma") return Scheme::Sdma;
  if (text == "noma") return Scheme::Noma;
  if (text == "rsma") return Scheme::Rsma;
  throw std::invalid_argument("unknown scheme '" + std::string(text) + "'");
}

RadarMode parse_radar_mode(std::string_view text) {
  if (text == "off") return RadarMode::Disabled;
  if (text == "sic") return RadarMode::EnabledWithSic;
  if (text == "nosic") return RadarMode::EnabledNoSic;
  throw std::invalid_argument("unknown radar mode '" + std::string(text) + "'");
}

void RadarSequenceMode::validate() const {
  if (kind == RadarMode::Disabled && radar_power != 0.0) {
    throw std::invalid_argument("disabled radar sequence must carry zero power");
  }
  if (kind != RadarMode::Disabled && !(radar_power > 0.0)) {
    throw std::invalid_argument("enabled radar sequence needs positive power");
  }
}

CMat PrecoderSet::stacked() const {
  const bool with_radar = radar_mode != RadarMode::Disabled;
  const bool with_common = scheme == Scheme::Rsma;
  const Eigen::Index cols =
      (with_radar ? radar.cols() : 0) + (with_common ? 1 : 0) + users.cols();
  CMat w(users.rows(), cols);
  Eigen::Index c = 0;
  if (with_radar) {
    w.middleCols(c, radar.cols()) = radar;
    c += radar.cols();
  }
  if (with_common) w.col(c++) = common;
  w.middleCols(c, users.cols()) = users;
  return w;
}

CMat PrecoderSet::covariance() const {
  const CMat w = stacked();
  return w * w.adjoint();
}

void PrecoderSet::validate(const ChannelSet& channels) const {
  if (users.rows() != channels.n_tx()) throw StructuralError("precoder rows must equal N_T");
  if (users.cols() != channels.n_users()) throw StructuralError("one precoder per user required");
  if (radar.size() != 0 && (radar.rows() != users.rows() || radar.cols() != users.rows())) {
    throw StructuralError("radar precoder must be N_T x N_T");
  }
  if (radar_mode == RadarMode::Disabled && radar.size() != 0 && radar.squaredNorm() != 0.0) {
    throw StructuralError("radar precoder must be zero when the radar sequence is disabled");
  }
  if (radar_mode != RadarMode::Disabled && radar.size() == 0) {
    throw StructuralError("radar precoder missing for an enabled radar sequence");
  }
  if (scheme == Scheme::Rsma) {
    if (common.size() != users.rows()) throw StructuralError("RSMA needs an N_T common precoder");
    if (common_alloc.size() != users.cols()) throw StructuralError("RSMA needs K common allocations");
    if ((common_alloc.array() < 0).any()) throw StructuralError("common allocations must be >= 0");
  }
  if (scheme == Scheme::Noma) {
    std::vector<int> sorted = decode_order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect(static_cast<std::size_t>(users.cols()));
    std::iota(expect.begin(), expect.end(), 0);
    if (sorted != expect) throw StructuralError("decode order must be a permutation of users");
  }
}

namespace {

// eta_r * ||h^H W_r||^2
double radar_leak(const CVec& h, const PrecoderSet& p) {
  if (p.radar_mode != RadarMode::EnabledNoSic || p.radar.size() == 0) return 0.0;
  return (h.adjoint() * p.radar).squaredNorm();
}

double gain(const CVec& h, const CVec& w) { return std::norm(h.dot(w)); }

}  // namespace

RVec sinr_sdma(const ChannelSet& channels, const PrecoderSet& precoders, double noise) {
  precoders.validate(channels);
  const int k_users = channels.n_users();
  RVec out(k_users);
  for (int k = 0; k < k_users; ++k) {
    const CVec h = channels.user(k);
    double interf = radar_leak(h, precoders) + noise;
    for (int j = 0; j < k_users; ++j) {
      if (j != k) interf += gain(h, precoders.users.col(j));
    }
    out(k) = gain(h, precoders.users.col(k)) / interf;
  }
  return out;
}

RateReport rates_sdma(const ChannelSet& channels, const PrecoderSet& precoders, double noise) {
  RateReport r;
  r.sinr = sinr_sdma(channels, precoders, noise);
  r.rates = r.sinr.unaryExpr([](double g) { return std::log2(1.0 + g); });
  return r;
}

RMat noma_sinr_matrix(const ChannelSet& channels, const PrecoderSet& precoders, double noise) {
  precoders.validate(channels);
  const int k_users = channels.n_users();
  const auto& order = precoders.decode_order;
  RMat g = RMat::Constant(k_users, k_users, std::numeric_limits<double>::quiet_NaN());
  for (int t = 0; t < k_users; ++t) {
    const CVec h = channels.user(order[static_cast<std::size_t>(t)]);
    const double base = radar_leak(h, precoders) + noise;
    for (int k = 0; k <= t; ++k) {
      double interf = base;
      for (int j = k + 1; j < k_users; ++j) {
        interf += gain(h, precoders.users.col(order[static_cast<std::size_t>(j)]));
      }
      g(t, k) = gain(h, precoders.users.col(order[static_cast<std::size_t>(k)])) / interf;
    }
  }
  return g;
}

RateReport rates_noma(const ChannelSet& channels, const PrecoderSet& precoders, double noise) {
  const RMat g = noma_sinr_matrix(channels, precoders, noise);
  const int k_users = channels.n_users();
  RateReport r;
  r.sinr.resize(k_users);
  r.rates.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    double worst = std::numeric_limits<double>::infinity();
    for (int t = k; t < k_users; ++t) worst = std::min(worst, g(t, k));
    const int user = precoders.decode_order[static_cast<std::size_t>(k)];
    r.sinr(user) = worst;
    r.rates(user) = std::log2(1.0 + worst);
  }
  return r;
}

RateReport rates_rsma(const ChannelSet& channels, const PrecoderSet& precoders, double noise) {
  precoders.validate(channels);
  const int k_users = channels.n_users();
  RateReport r;
  r.sinr.resize(k_users);
  r.common_sinr.resize(k_users);
  r.private_rates.resize(k_users);
  double common_rate = std::numeric_limits<double>::infinity();
  for (int k = 0; k < k_users; ++k) {
    const CVec h = channels.user(k);
    // Same accumulation order as sinr_sdma so a switched-off common stream
    // reproduces SDMA bit for bit.
    double interf = radar_leak(h, precoders) + noise;
    for (int j = 0; j < k_users; ++j) {
      if (j != k) interf += gain(h, precoders.users.col(j));
    }
    const double own = gain(h, precoders.users.col(k));
    r.common_sinr(k) = gain(h, precoders.common) / (interf + own);
    r.sinr(k) = own / interf;
    r.private_rates(k) = std::log2(1.0 + r.sinr(k));
    common_rate = std::min(common_rate, std::log2(1.0 + r.common_sinr(k)));
  }
  r.common_rate = k_users > 0 ? common_rate : 0.0;
  r.common_feasible = precoders.common_alloc.sum() <= r.common_rate + 1e-9;
  r.rates = precoders.common_alloc + r.private_rates;
  return r;
}

RateReport rates_tdma(const ChannelSet& channels, const Scenario& scenario, double comm_fraction) {
  if (!(comm_fraction >= 0.0 && comm_fraction <= 1.0)) {
    throw std::domain_error("communication time fraction must lie in [0, 1]");
  }
  const int k_users = channels.n_users();
  RateReport r;
  r.sinr.resize(k_users);
  r.rates.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    const double coherent = channels.h.row(k).cwiseAbs().sum();
    r.sinr(k) = scenario.per_antenna_power() * coherent * coherent / scenario.comm_noise;
    r.rates(k) = comm_fraction / k_users * std::log2(1.0 + r.sinr(k));
  }
  return r;
}

RateReport evaluate_rates(const ChannelSet& channels, const PrecoderSet& precoders, double noise) {
  switch (precoders.scheme) {
    case Scheme::Sdma: return rates_sdma(channels, precoders, noise);
    case Scheme::Noma: return rates_noma(channels, precoders, noise);
    case Scheme::Rsma: return rates_rsma(channels, precoders, noise);
    case Scheme::Tdma: break;
  }
  throw StructuralError("TDMA rates are not precoder based; use rates_tdma");
}

CommMetrics comm_metrics(const RateReport& rates, const RVec& weights, const Scenario& scenario) {
  if (weights.size() != rates.rates.size()) throw StructuralError("one weight per user required");
  if ((weights.array() < 0).any()) throw std::invalid_argument("weights must be nonnegative");
  CommMetrics m;
  m.wsr = weights.dot(rates.rates);
  m.mfr = rates.rates.size() > 0 ? rates.rates.minCoeff() : 0.0;
  m.ee = rates.rates.sum() / (scenario.power_budget / scenario.amp_efficiency + scenario.circuit_power);
  return m;
}

double comm_value(const RateReport& rates, CommObjective objective, const RVec& weights) {
  if (objective == CommObjective::Mfr) return rates.rates.size() > 0 ? rates.rates.minCoeff() : 0.0;
  if (weights.size() != rates.rates.size()) throw StructuralError("one weight per user required");
  return weights.dot(rates.rates);
}

std::vector<int> default_decode_order(const ChannelSet& channels) {
  std::vector<int> order(static_cast<std::size_t>(channels.n_users()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> norms(order.size());
  for (int k = 0; k < channels.n_users(); ++k) norms[static_cast<std::size_t>(k)] = channels.h.row(k).squaredNorm();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return norms[static_cast<std::size_t>(a)] < norms[static_cast<std::size_t>(b)];
  });
  return order;
}

RVec optimal_common_allocation(double common_rate, const RVec& private_rates,
                               CommObjective objective, const RVec& weights) {
  const Eigen::Index k_users = private_rates.size();
  RVec alloc = RVec::Zero(k_users);
  if (k_users == 0 || common_rate <= 0.0) return alloc;
  if (objective == CommObjective::Wsr) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < k_users; ++k) {
      if (weights(k) > weights(best)) best = k;
    }
    alloc(best) = common_rate;
    return alloc;
  }
  // Water-fill: find level L with sum_k max(0, L - R_pk) = R_c.
  std::vector<double> sorted(private_rates.data(), private_rates.data() + k_users);
  std::sort(sorted.begin(), sorted.end());
  double level = sorted.back() + common_rate / static_cast<double>(k_users);
  double prefix = 0.0;
  for (std::size_t m = 0; m < sorted.size(); ++m) {
    prefix += sorted[m];
    const double candidate = (common_rate + prefix) / static_cast<double>(m + 1);
    const double next = m + 1 < sorted.size() ? sorted[m + 1] : std::numeric_limits<double>::infinity();
    if (candidate <= next) {
      level = candidate;
      break;
    }
  }
  for (Eigen::Index k = 0; k < k_users; ++k) alloc(k) = std::max(0.0, level - private_rates(k));
  // Remove rounding drift so the allocation never exceeds the common rate.
  const double total = alloc.sum();
  if (total > common_rate && total > 0) alloc *= common_rate / total;
  return alloc;
}

}  // namespace isacma
