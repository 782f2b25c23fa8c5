// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include "doctest.h"

#include <cmath>

#include "isacma/rates.hpp"
#include "isacma/rng.hpp"
#include "oracles.hpp"

using namespace isacma;

namespace {

ChannelSet channels_of(std::initializer_list<std::initializer_list<cd>> rows) {
  ChannelSet ch;
  ch.h.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (const auto& v : row) ch.h(r, c++) = v;
    ++r;
  }
  return ch;
}

PrecoderSet sdma_of(const CMat& users) {
  PrecoderSet p;
  p.scheme = Scheme::Sdma;
  p.users = users;
  p.radar = CMat::Zero(users.rows(), users.rows());
  return p;
}

CMat random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  CMat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = scale * cd(rng.normal(), rng.normal());
  return m;
}

ChannelSet random_channels(Rng& rng, int k, int n) {
  ChannelSet ch;
  ch.h = random_matrix(rng, k, n, std::sqrt(0.5));
  return ch;
}

}  // namespace

TEST_CASE("SDMA hand-evaluated examples") {
  {
    const ChannelSet ch = channels_of({{cd(1), cd(0)}});
    CMat w(2, 1);
    w << 2, 0;
    const RateReport r = rates_sdma(ch, sdma_of(w), 1.0);
    CHECK(r.sinr(0) == doctest::Approx(4.0));
    CHECK(r.rates(0) == doctest::Approx(std::log2(5.0)));
  }
  {
    const ChannelSet ch = channels_of({{cd(1), cd(0)}, {cd(0), cd(1)}});
    CMat w(2, 2);
    w << 1.5, 0, 0, 0.5;
    const RVec g = sinr_sdma(ch, sdma_of(w), 1.0);
    CHECK(g(0) == doctest::Approx(2.25));
    CHECK(g(1) == doctest::Approx(0.25));
  }
  {
    const ChannelSet ch = channels_of({{cd(1), cd(1)}, {cd(1), cd(-1)}});
    CMat w = CMat::Identity(2, 2);
    PrecoderSet p = sdma_of(w);
    p.radar_mode = RadarMode::EnabledNoSic;
    p.radar = 0.5 * CMat::Identity(2, 2);
    CHECK(sinr_sdma(ch, p, 1.0)(0) == doctest::Approx(0.4));
    p.radar_mode = RadarMode::EnabledWithSic;
    CHECK(sinr_sdma(ch, p, 1.0)(0) == doctest::Approx(0.5));
  }
}

TEST_CASE("SDMA matches the loop oracle on random draws") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 1 + trial % 4, n = 2 + trial % 3;
    const ChannelSet ch = random_channels(rng, k, n);
    PrecoderSet p = sdma_of(random_matrix(rng, n, k, 0.3));
    p.radar_mode = trial % 2 ? RadarMode::EnabledNoSic : RadarMode::EnabledWithSic;
    p.radar = random_matrix(rng, n, n, 0.1);
    const RVec g = sinr_sdma(ch, p, 0.05);
    const auto ref = oracle::sdma_sinr(ch.h, p.users, p.radar, p.radar_mode == RadarMode::EnabledNoSic, 0.05);
    for (int u = 0; u < k; ++u) CHECK(g(u) == doctest::Approx(ref[static_cast<std::size_t>(u)]).epsilon(1e-12));
  }
}

TEST_CASE("structural errors") {
  const ChannelSet ch = channels_of({{cd(1), cd(0)}});
  CHECK_THROWS_AS(sinr_sdma(ch, sdma_of(CMat::Ones(3, 1)), 1.0), StructuralError);
  PrecoderSet noma = sdma_of(CMat::Ones(2, 1));
  noma.scheme = Scheme::Noma;
  noma.decode_order = {1};
  CHECK_THROWS_AS(rates_noma(ch, noma, 1.0), StructuralError);
  PrecoderSet bad = sdma_of(CMat::Ones(2, 1));
  bad.radar = CMat::Identity(2, 2);
  CHECK_THROWS_AS(sinr_sdma(ch, bad, 1.0), StructuralError);
  CHECK_THROWS_AS(evaluate_rates(ch, [] { PrecoderSet t; t.scheme = Scheme::Tdma; return t; }(), 1.0),
                  StructuralError);
}

TEST_CASE("NOMA scalar hand evaluation") {
  const double a = 0.8, b = 0.6;
  const ChannelSet ch = channels_of({{cd(1)}, {cd(2)}});
  PrecoderSet p = sdma_of((CMat(1, 2) << a, b).finished());
  p.scheme = Scheme::Noma;
  p.decode_order = {0, 1};
  const RateReport r = rates_noma(ch, p, 1.0);
  const double r1 = std::min(std::log2(1 + a * a / (b * b + 1)), std::log2(1 + 4 * a * a / (4 * b * b + 1)));
  CHECK(r.rates(0) == doctest::Approx(r1).epsilon(1e-14));
  CHECK(r.rates(1) == doctest::Approx(std::log2(1 + 4 * b * b)).epsilon(1e-14));

  const RMat g = noma_sinr_matrix(ch, p, 1.0);
  CHECK(std::isnan(g(0, 1)));
  CHECK(g(1, 0) == doctest::Approx(4 * a * a / (4 * b * b + 1)));
}

TEST_CASE("NOMA symmetric users and decoder-set monotonicity") {
  const ChannelSet sym = channels_of({{cd(1), cd(0.5)}, {cd(1), cd(0.5)}});
  PrecoderSet p = sdma_of((CMat(2, 2) << 0.4, 0.4, 0.2, 0.2).finished());
  p.scheme = Scheme::Noma;
  p.decode_order = {0, 1};
  const RMat g = noma_sinr_matrix(sym, p, 1.0);
  CHECK(g(0, 0) == doctest::Approx(g(1, 0)).epsilon(1e-15));

  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + trial % 3;
    const ChannelSet ch = random_channels(rng, k, 3);
    PrecoderSet q = sdma_of(random_matrix(rng, 3, k, 0.3));
    q.scheme = Scheme::Noma;
    q.decode_order = default_decode_order(ch);
    const RateReport r = rates_noma(ch, q, 0.1);
    const RMat m = noma_sinr_matrix(ch, q, 0.1);
    for (int pos = 0; pos < k; ++pos) {
      const int user = q.decode_order[static_cast<std::size_t>(pos)];
      CHECK(r.rates(user) <= std::log2(1 + m(pos, pos)) + 1e-15);
    }
  }
}

TEST_CASE("default decode order sorts by channel strength with index ties") {
  const ChannelSet ch = channels_of({{cd(2)}, {cd(1)}, {cd(1)}, {cd(3)}});
  CHECK(default_decode_order(ch) == std::vector<int>{1, 2, 0, 3});
}

TEST_CASE("RSMA scalar hand evaluation") {
  const ChannelSet ch = channels_of({{cd(1)}});
  PrecoderSet p = sdma_of(CMat::Ones(1, 1));
  p.scheme = Scheme::Rsma;
  p.common = CVec::Ones(1);
  p.common_alloc = RVec::Constant(1, 0.5);
  const RateReport r = rates_rsma(ch, p, 1.0);
  CHECK(r.common_sinr(0) == doctest::Approx(0.5));
  CHECK(r.sinr(0) == doctest::Approx(1.0));
  CHECK(r.common_rate == doctest::Approx(std::log2(1.5)));
  CHECK(r.common_feasible);
  CHECK(r.rates(0) == doctest::Approx(1.5));
  p.common_alloc(0) = 0.6;
  CHECK_FALSE(rates_rsma(ch, p, 1.0).common_feasible);
  p.common_alloc(0) = -0.1;
  CHECK_THROWS_AS(rates_rsma(ch, p, 1.0), StructuralError);
}

TEST_CASE("RSMA symmetric users share the common SINR") {
  const ChannelSet ch = channels_of({{cd(1), cd(1)}, {cd(1), cd(1)}});
  PrecoderSet p = sdma_of((CMat(2, 2) << 0.3, 0.3, 0.1, 0.1).finished());
  p.scheme = Scheme::Rsma;
  p.common = CVec::Constant(2, 0.5);
  p.common_alloc = RVec::Zero(2);
  const RateReport r = rates_rsma(ch, p, 1.0);
  CHECK(r.common_sinr(0) == r.common_sinr(1));
  CHECK(r.common_rate == doctest::Approx(std::log2(1 + r.common_sinr(0))));
}

TEST_CASE("rate invariants on random draws") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 1 + trial % 4, n = 2 + trial % 3;
    const ChannelSet ch = random_channels(rng, k, n);
    PrecoderSet p = sdma_of(random_matrix(rng, n, k, 0.4));
    p.radar_mode = RadarMode::EnabledNoSic;
    p.radar = random_matrix(rng, n, n, 0.1);
    const RVec g1 = sinr_sdma(ch, p, 0.1);
    const RVec g2 = sinr_sdma(ch, p, 0.2);
    CHECK((g2.array() < g1.array()).all());

    // A unit-modulus rotation of one precoder leaves every rate unchanged.
    PrecoderSet rotated = p;
    const int j = trial % k;
    rotated.users.col(j) *= std::polar(1.0, rng.uniform(0, 2 * kPi));
    CHECK((sinr_sdma(ch, rotated, 0.1) - g1).norm() <= 1e-12 * (1 + g1.norm()));

    PrecoderSet noma = p;
    noma.scheme = Scheme::Noma;
    noma.decode_order = default_decode_order(ch);
    PrecoderSet noma_rot = noma;
    noma_rot.users.col(j) *= std::polar(1.0, 1.234);
    CHECK((rates_noma(ch, noma, 0.1).rates - rates_noma(ch, noma_rot, 0.1).rates).norm() < 1e-12);

    PrecoderSet rsma = p;
    rsma.scheme = Scheme::Rsma;
    rsma.common = random_matrix(rng, n, 1, 0.3).col(0);
    rsma.common_alloc = RVec::Zero(k);
    PrecoderSet rsma_rot = rsma;
    rsma_rot.common *= std::polar(1.0, 0.77);
    const RateReport a = rates_rsma(ch, rsma, 0.1), b = rates_rsma(ch, rsma_rot, 0.1);
    CHECK(std::abs(a.common_rate - b.common_rate) < 1e-12);
    CHECK((a.rates - a.private_rates).norm() == 0.0);
    CHECK((a.rates.array() >= 0).all());
  }
}

TEST_CASE("TDMA baseline") {
  Scenario sc;
  sc.power_budget = 2.0;
  sc.comm_noise = 1.0;
  sc.n_tx = 2;
  const ChannelSet one = channels_of({{cd(1), cd(0, 1)}});
  CHECK(rates_tdma(one, sc, 1.0).rates(0) == doctest::Approx(std::log2(5.0)));
  CHECK(rates_tdma(one, sc, 0.0).rates(0) == 0.0);
  CHECK_THROWS_AS(rates_tdma(one, sc, 1.5), std::domain_error);

  const ChannelSet two = channels_of({{cd(1), cd(0, 1)}, {cd(1), cd(0, 1)}});
  CHECK(rates_tdma(two, sc, 0.6).rates(0) == doctest::Approx(0.5 * rates_tdma(one, sc, 0.6).rates(0)));
}

TEST_CASE("communication metrics") {
  Scenario sc;
  RateReport r;
  r.rates = RVec::Ones(3);
  CHECK(comm_metrics(r, (RVec(3) << 0.4, 0.3, 0.3).finished(), sc).wsr == doctest::Approx(1.0));
  r.rates = (RVec(2) << 2, 3).finished();
  CHECK(comm_metrics(r, RVec::Ones(2), sc).mfr == 2.0);
  sc.power_budget = 2.0;
  sc.amp_efficiency = 1.0;
  sc.circuit_power = 0.0;
  r.rates = RVec::Constant(1, 4.0);
  CHECK(comm_metrics(r, RVec::Ones(1), sc).ee == doctest::Approx(2.0));
  sc.amp_efficiency = 0.5;
  sc.circuit_power = 1.0;
  CHECK(comm_metrics(r, RVec::Ones(1), sc).ee == doctest::Approx(4.0 / 5.0));
  CHECK_THROWS_AS(comm_metrics(r, -RVec::Ones(1), sc), std::invalid_argument);
  CHECK(comm_value(r, CommObjective::Wsr, RVec::Constant(1, 0.5)) == 2.0);
}

TEST_CASE("common-rate allocation") {
  const RVec priv = (RVec(3) << 1.0, 2.0, 4.0).finished();
  const RVec mfr = optimal_common_allocation(1.5, priv, CommObjective::Mfr, RVec());
  CHECK(mfr.sum() == doctest::Approx(1.5));
  CHECK((priv + mfr).minCoeff() == doctest::Approx(2.25));
  CHECK((mfr.array() >= 0).all());
  const RVec wsr = optimal_common_allocation(1.5, priv, CommObjective::Wsr, (RVec(3) << 0.3, 0.4, 0.3).finished());
  CHECK(wsr(1) == 1.5);
  CHECK(wsr(0) + wsr(2) == 0.0);
  CHECK(optimal_common_allocation(0.0, priv, CommObjective::Mfr, RVec()).sum() == 0.0);
}

TEST_CASE("radar mode parsing and invariants") {
  CHECK(parse_scheme("rsma") == Scheme::Rsma);
  CHECK(to_string(Scheme::Noma) == "noma");
  CHECK(radar_interference_flag(RadarMode::EnabledNoSic) == 1);
  CHECK(radar_interference_flag(RadarMode::EnabledWithSic) == 0);
  RadarSequenceMode m;
  CHECK_NOTHROW(m.validate());
  m.radar_power = 0.1;
  CHECK_THROWS(m.validate());
  m.kind = RadarMode::EnabledWithSic;
  CHECK_NOTHROW(m.validate());
  CHECK(m.eta() == 0);
  m.radar_power = 0.0;
  CHECK_THROWS(m.validate());
}
