// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include "doctest.h"

#include <cmath>

#include "isacma/rng.hpp"
#include "isacma/sensing.hpp"
#include "oracles.hpp"

using namespace isacma;

namespace {

Scenario small_scenario(int n_tx, int n_rx, int q, int symbols) {
  Scenario sc;
  sc.n_tx = n_tx;
  sc.n_rx = n_rx;
  sc.n_targets = q;
  sc.cpi_length = symbols;
  return sc;
}

TargetSet random_targets(Rng& rng, int q, double fc = 3e9) {
  std::vector<Target> t;
  for (int i = 0; i < q; ++i) t.push_back({rng.uniform(-1.2, 1.2), cd(rng.normal(), rng.normal()), rng.uniform(-40, 40)});
  return TargetSet(t, fc);
}

double symmetric_gap(const RMat& f) { return (f - f.transpose()).norm(); }

double max_normalized_error(const RMat& a, const RMat& ref) {
  double worst = 0.0;
  for (Eigen::Index p = 0; p < ref.rows(); ++p) {
    for (Eigen::Index q = 0; q < ref.cols(); ++q) {
      const double scale = std::sqrt(std::abs(ref(p, p) * ref(q, q)));
      worst = std::max(worst, std::abs(a(p, q) - ref(p, q)) / scale);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("echo derivatives closed forms") {
  Scenario sc = small_scenario(1, 1, 1, 8);
  const TargetSet still({Target{0.0, cd(1, 0), 0.0}}, 3e9);
  const auto d = echo_derivatives(still, sc, 5);
  REQUIRE(d.size() == 4);
  CHECK(std::abs(d[1](0, 0) - cd(1, 0)) < 1e-15);
  CHECK(std::abs(d[2](0, 0) - cd(0, 1)) < 1e-15);
  CHECK(std::abs(d[3](0, 0) - cd(0, 2 * kPi * 5 * sc.symbol_period)) < 1e-18);

  sc = small_scenario(3, 2, 1, 8);
  const TargetSet moving({Target{0.4, cd(0.3, -0.7), 0.0}}, 3e9);
  const auto m = echo_derivatives(moving, sc, 3);
  const CMat ba = oracle::ula(0.4, 2) * oracle::ula(0.4, 3).transpose();
  CHECK((m[3] - cd(0, 2 * kPi * 3 * sc.symbol_period) * cd(0.3, -0.7) * ba).norm() < 1e-15);
}

TEST_CASE("echo derivatives match central differences of the echo") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int q = 1 + trial % 3;
    const Scenario sc = small_scenario(1 + trial % 5, 1 + trial % 4, q, 10);
    const TargetSet t = random_targets(rng, q);
    const RVec xi = t.parameter_vector();
    const int i = 1 + trial % 9;
    const auto d = echo_derivatives(t, sc, i);
    for (Eigen::Index p = 0; p < xi.size(); ++p) {
      const double h = 1e-6 * std::max(1.0, std::abs(xi(p)));
      RVec up = xi, dn = xi;
      up(p) += h;
      dn(p) -= h;
      const CMat fd = (oracle::echo(up, q, sc.n_tx, sc.n_rx, sc.symbol_period, i) -
                       oracle::echo(dn, q, sc.n_tx, sc.n_rx, sc.symbol_period, i)) /
                      (2 * h);
      const auto& dp = d[static_cast<std::size_t>(p)];
      if (dp.norm() > 0) CHECK((dp - fd).norm() / dp.norm() <= 1e-6);
      else CHECK(fd.norm() < 1e-9);
    }
  }
}

TEST_CASE("FIM scalar examples") {
  Scenario sc = small_scenario(1, 1, 1, 4);
  sc.sense_noise = 1.0;
  const TargetSet t({Target{0.0, cd(1, 0), 0.0}}, 3e9);
  const RMat f = fim(CMat::Ones(1, 1), t, sc, 4).f;
  CHECK(f(1, 1) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(f(2, 2) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(std::abs(f(1, 2)) < 1e-14);
  CHECK(fim(CMat::Zero(1, 1), t, sc, 4).f.norm() == 0.0);
  CHECK_THROWS_AS(fim(-CMat::Ones(1, 1), t, sc, 4), std::domain_error);
  CHECK_THROWS_AS(fim(CMat::Ones(1, 1), t, sc, 0), std::invalid_argument);
}

TEST_CASE("FIM agrees with an independent finite-difference construction") {
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const int q = 1 + trial % 3;
    const Scenario sc = small_scenario(1 + trial % 6, 1 + trial % 9, q, 6 + trial % 10);
    const TargetSet t = random_targets(rng, q);
    const CMat r = oracle::random_covariance(rng, sc.n_tx, sc.power_budget);
    const FisherMatrix f = fim(r, t, sc, sc.cpi_length);
    const RMat ref = oracle::finite_difference_fim(r, t.parameter_vector(), q, sc.n_rx, sc.sense_noise,
                                                   sc.symbol_period, sc.cpi_length);
    CHECK(max_normalized_error(f.f, ref) <= 1e-4);
    CHECK(symmetric_gap(f.f) <= 1e-9 * f.f.norm());
    Eigen::SelfAdjointEigenSolver<RMat> eig(f.f);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * f.f.trace());
  }
}

TEST_CASE("FIM closed forms for a single target") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Scenario sc = small_scenario(2 + trial % 5, 1 + trial % 7, 1, 20 + trial);
    const TargetSet t = random_targets(rng, 1);
    const CMat r = oracle::random_covariance(rng, sc.n_tx, sc.power_budget);
    const RMat f = fim(r, t, sc, sc.cpi_length).f;
    const CVec a = oracle::ula(t[0].angle, sc.n_tx);
    const double g = (a.transpose() * r * a.conjugate()).value().real();
    const double sum_sq = sc.cpi_length * (sc.cpi_length + 1.0) * (2.0 * sc.cpi_length + 1.0) / 6.0;
    const double fa = 2.0 * sc.cpi_length * sc.n_rx * g / sc.sense_noise;
    const double ff = 2.0 / sc.sense_noise * std::pow(2 * kPi * sc.symbol_period, 2) * std::norm(t[0].reflection) *
                      sc.n_rx * g * sum_sq;
    CHECK(std::abs(f(1, 1) - fa) <= 1e-9 * fa);
    CHECK(std::abs(f(2, 2) - fa) <= 1e-9 * fa);
    CHECK(std::abs(f(3, 3) - ff) <= 1e-9 * ff);
  }
}

TEST_CASE("zero-Doppler FIM block scales linearly with the CPI") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const int q = 1 + trial % 3;
    Scenario sc = small_scenario(3, 4, q, 1);
    std::vector<Target> tv;
    for (int i = 0; i < q; ++i) tv.push_back({-0.9 + 0.6 * i + 0.1 * rng.uniform(), cd(rng.normal(), rng.normal()), 0.0});
    const TargetSet t(tv, 3e9);
    const CMat r = oracle::random_covariance(rng, 3, 0.1);
    const RMat f1 = fim(r, t, sc, 7).f.topLeftCorner(3 * q, 3 * q);
    const RMat f2 = fim(r, t, sc, 21).f.topLeftCorner(3 * q, 3 * q);
    CHECK((f2 - 3.0 * f1).norm() <= 1e-12 * f2.norm());
  }
}

TEST_CASE("FimOperator matches the entrywise definition") {
  Rng rng(14);
  const Scenario sc = small_scenario(3, 2, 2, 9);
  const TargetSet t = random_targets(rng, 2);
  const FimOperator op(t, sc, 9);
  const CMat r = oracle::random_covariance(rng, 3, 0.1);
  const RMat f = op.apply(r);
  for (int p = 0; p < op.dim(); ++p) {
    for (int q = 0; q < op.dim(); ++q) {
      const double direct = (op.kernel(p, q) * r).trace().real();
      CHECK(std::abs(f(p, q) - direct) <= 1e-10 * std::sqrt(f(p, p) * f(q, q)));
    }
  }
}

TEST_CASE("Bayesian FIM") {
  FisherMatrix f{(RMat(2, 2) << 4, 1, 1, 3).finished(), 4, CMat::Identity(1, 1)};
  CHECK(bayesian_fim(f, std::nullopt).f == f.f);
  const RMat shifted = bayesian_fim(f, RMat::Identity(2, 2) * 0.5).f;
  Eigen::SelfAdjointEigenSolver<RMat> e0(f.f), e1(shifted);
  CHECK((e1.eigenvalues() - e0.eigenvalues() - RVec::Constant(2, 0.5)).norm() < 1e-12);
  FisherMatrix diag{RMat::Identity(2, 2) * 4, 4, CMat::Identity(1, 1)};
  const RMat prior = (RVec(2) << 1.0 / 0.25, 1.0 / 4.0).finished().asDiagonal();
  const RMat crb = bayesian_fim(diag, prior).f.inverse();
  CHECK(crb(0, 0) == doctest::Approx(1.0 / 8.0));
  CHECK(crb(1, 1) == doctest::Approx(1.0 / 4.25));
  CHECK_THROWS_AS(bayesian_fim(f, RMat::Identity(3, 3)), StructuralError);
}

TEST_CASE("sense report examples") {
  FisherMatrix f{RMat::Identity(2, 2) * 8, 4, CMat::Identity(1, 1)};
  const SenseReport r = sense_report(f);
  CHECK(r.crb(0, 0) == doctest::Approx(0.125));
  CHECK(r.rcrb(1) == doctest::Approx(0.35355339).epsilon(1e-8));
  CHECK(r.trace_crb == doctest::Approx(0.25));

  FisherMatrix zero{RMat::Zero(4, 4), 4, CMat::Identity(1, 1)};
  CHECK_THROWS_AS(sense_report(zero), SingularFim);
  FisherMatrix nearly{RVec((RVec(4) << 1, 1, 1, 1e-14).finished()).asDiagonal(), 4, CMat::Identity(1, 1)};
  nearly.f(0, 1) = nearly.f(1, 0) = 1.0 - 1e-15;
  CHECK_THROWS_AS(sense_report(nearly), SingularFim);

  Rng rng(15);
  RMat a = RMat::Random(4, 4), b = RMat::Random(4, 4);
  const RMat f1 = a * a.transpose() + RMat::Identity(4, 4), f2 = b * b.transpose() + 2 * RMat::Identity(4, 4);
  RMat block = RMat::Zero(8, 8);
  block.topLeftCorner(4, 4) = f1;
  block.bottomRightCorner(4, 4) = f2;
  const SenseReport two = sense_report(FisherMatrix{block, 4, CMat::Identity(1, 1)});
  CHECK(two.avg_trace_crb == doctest::Approx((f1.inverse().trace() + f2.inverse().trace()) / 2).epsilon(1e-10));
  CHECK(two.trace_crb == doctest::Approx(two.crb.diagonal().sum()));
  CHECK((two.rcrb.array() >= 0).all());
}

TEST_CASE("CRB diagonal is Loewner monotone") {
  Rng rng(16);
  for (int trial = 0; trial < 30; ++trial) {
    RMat a(4, 4), b(4, 4);
    for (Eigen::Index i = 0; i < 16; ++i) {
      a(i) = rng.normal();
      b(i) = rng.normal();
    }
    const RMat f = a * a.transpose() + 0.1 * RMat::Identity(4, 4);
    const RMat extra = b * b.transpose() * rng.uniform();
    const SenseReport lo = sense_report(FisherMatrix{f, 1, CMat::Identity(1, 1)});
    const SenseReport hi = sense_report(FisherMatrix{f + extra, 1, CMat::Identity(1, 1)});
    CHECK((hi.crb.diagonal().array() <= lo.crb.diagonal().array() * (1 + 1e-10)).all());
  }
}

TEST_CASE("radar SNR") {
  Scenario sc = small_scenario(4, 5, 1, 16);
  const TargetSet t({Target{0.3, cd(1, 0), 10.0}}, 3e9);
  CHECK(radar_snr(CMat::Zero(4, 4), t, sc) == 0.0);
  const CMat iso = CMat::Identity(4, 4) * (sc.power_budget / 4);
  CHECK(radar_snr(iso, t, sc) == doctest::Approx(5 * sc.power_budget / sc.sense_noise).epsilon(1e-12));

  // Monte-Carlo check with two targets, so cross-target Doppler phases matter.
  Rng rng(17);
  sc = small_scenario(3, 4, 2, 10000);
  const TargetSet two({Target{0.2, cd(0.8, 0.4), 40.0}, Target{0.35, cd(-0.5, 0.9), -3.0}}, 3e9);
  const CMat r = oracle::random_covariance(rng, 3, 0.1);
  const Eigen::LLT<CMat> chol(r + 1e-15 * CMat::Identity(3, 3));
  const RVec xi = two.parameter_vector();
  double total = 0.0;
  for (int i = 1; i <= sc.cpi_length; ++i) {
    CVec z(3);
    for (int n = 0; n < 3; ++n) z(n) = std::sqrt(0.5) * cd(rng.normal(), rng.normal());
    const CVec x = chol.matrixL() * z;
    total += (oracle::echo(xi, 2, 3, 4, sc.symbol_period, i) * x).squaredNorm();
  }
  const double mc = total / (sc.cpi_length * sc.sense_noise);
  CHECK(std::abs(radar_snr(r, two, sc) - mc) <= 0.02 * mc);
}

TEST_CASE("radar mutual information") {
  Rng rng(18);
  Scenario sc = small_scenario(4, 6, 1, 64);
  const TargetSet t({Target{0.5, cd(0.6, -0.8), 10.0}}, 3e9);
  const CMat iso = CMat::Identity(4, 4) * (sc.power_budget / 4);
  CHECK(radar_mi(iso, t, sc) == doctest::Approx(std::log2(1 + sc.power_budget * 6 / sc.sense_noise)).epsilon(1e-14));
  CHECK(radar_mi(CMat::Zero(4, 4), t, sc) == 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat r = oracle::random_covariance(rng, 4, 0.1);
    const double ref = oracle::mi_determinant(r, 0.5, t[0].reflection, 6, sc.sense_noise);
    CHECK(std::abs(radar_mi(r, t, sc) - ref) <= 1e-10 * std::max(1.0, ref));
  }
  CHECK_THROWS_AS(radar_mi(iso, catalog_targets({1, 2}, 3e9), sc), UnsupportedConfiguration);
}

TEST_CASE("beampattern gain and MSE") {
  const double p_t = 0.1;
  const CMat iso = CMat::Identity(4, 4) * (p_t / 4);
  for (double th : {-1.0, 0.0, 0.4, 1.3}) CHECK(beampattern_gain(iso, th) == doctest::Approx(p_t).epsilon(1e-14));
  const CVec a0 = oracle::ula(0.3, 4);
  const CMat steered = (p_t / 4) * a0.conjugate() * a0.transpose();
  CHECK(beampattern_gain(steered, 0.3) == doctest::Approx(p_t * 4).epsilon(1e-14));

  RVec grid = RVec::LinSpaced(31, -1.4, 1.4);
  RVec actual(grid.size()), mainlobe(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    actual(j) = beampattern_gain(steered, grid(j));
    mainlobe(j) = std::abs(grid(j) - 0.3) < 0.2 ? 0.4 : 0.0;
  }
  CHECK(beampattern_mse(steered, actual, grid) == doctest::Approx(0.0));
  CHECK(beampattern_mse(iso, RVec::Zero(grid.size()), grid) == doctest::Approx(31 * p_t * p_t).epsilon(1e-12));
  double direct = 0.0;
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    const CVec a = oracle::ula(grid(j), 4);
    const double g = (a.transpose() * steered * a.conjugate()).value().real();
    direct += (mainlobe(j) - g) * (mainlobe(j) - g);
  }
  CHECK(beampattern_mse(steered, mainlobe, grid) == doctest::Approx(direct).epsilon(1e-12));
  CHECK_THROWS_AS(beampattern_mse(iso, RVec::Zero(2), (RVec(2) << 0.2, 0.1).finished()), std::invalid_argument);

  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    CHECK(beampattern_gain(oracle::random_covariance(rng, 5, 1.0), rng.uniform(-1.5, 1.5)) >= 0.0);
  }
}

TEST_CASE("estimator MSE") {
  const RVec truth = RVec::Zero(2);
  CHECK(estimator_mse(truth, truth) == 0.0);
  CHECK(estimator_mse((RVec(2) << 3, 4).finished(), truth) == 25.0);
  const std::vector<RVec> batch{(RVec(2) << 3, 4).finished(), (RVec(2) << 1, 0).finished()};
  CHECK(estimator_mse(batch, truth) == 13.0);
  CHECK_THROWS_AS(estimator_mse(RVec::Zero(3), truth), StructuralError);
}
