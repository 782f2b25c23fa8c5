// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include "isacma/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace isacma {

using conic::Affine;
using conic::AffineMatrix;
using conic::ConeProgram;

void DesignProblem::validate() const {
  scenario.validate();
  radar.validate();
  if (!(phi >= 0.0) || !std::isfinite(phi)) throw std::invalid_argument("phi must be finite and >= 0");
  if (scheme == Scheme::Tdma) {
    throw UnsupportedConfiguration("TDMA uses the closed-form time-split baseline, not the joint design");
  }
  if (targets.empty()) throw std::invalid_argument("the joint design needs at least one target");
  if (targets.size() != scenario.n_targets) throw StructuralError("target count differs from scenario");
  if (channels.n_tx() != scenario.n_tx || channels.n_users() != scenario.n_users) {
    throw StructuralError("channel dimensions differ from scenario");
  }
  if (scenario.n_users < 1) throw std::invalid_argument("the joint design needs at least one user");
  if (objective == CommObjective::Wsr) {
    if (weights.size() != scenario.n_users) throw std::invalid_argument("WSR weights must have length K");
    if ((weights.array() < 0).any()) throw std::invalid_argument("WSR weights must be >= 0");
  }
  if (radar.kind != RadarMode::Disabled && radar.radar_power > scenario.power_budget) {
    throw std::invalid_argument("radar power exceeds the transmit budget");
  }
}

void require_converged(const Solution& s) {
  if (!s.converged) throw NotConverged(s);
}

namespace {

RVec effective_weights(const DesignProblem& p) {
  if (p.objective == CommObjective::Wsr) return p.weights;
  return RVec::Ones(p.scenario.n_users);
}

double min_eigenvalue(const RMat& f) {
  Eigen::SelfAdjointEigenSolver<RMat> eig(f, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

// Column layout of the stacked precoder [W_r, w_c, w_1..w_K].
struct Columns {
  int n_tx = 0;
  int radar = 0;
  int common = 0;
  int users = 0;

  explicit Columns(const DesignProblem& p)
      : n_tx(p.scenario.n_tx),
        radar(p.radar.kind == RadarMode::Disabled ? 0 : p.scenario.n_tx),
        common(p.scheme == Scheme::Rsma ? 1 : 0),
        users(p.scenario.n_users) {}

  int total() const { return radar + common + users; }
  int common_col() const { return radar; }
  int user_col(int k) const { return radar + common + k; }
};

// One decoding event: a receiver extracting one stream while some columns interfere.
struct Event {
  int receiver;
  int signal;
  std::vector<int> interference;
  int slot;  // rate variable this event bounds
};

std::vector<Event> build_events(const DesignProblem& p, const Columns& cols,
                                const std::vector<int>& order) {
  const int k_users = p.scenario.n_users;
  std::vector<int> radar_cols;
  if (p.radar.kind == RadarMode::EnabledNoSic) {
    for (int r = 0; r < cols.radar; ++r) radar_cols.push_back(r);
  }
  std::vector<Event> out;
  auto with_radar = [&](std::vector<int> v) {
    v.insert(v.end(), radar_cols.begin(), radar_cols.end());
    return v;
  };
  switch (p.scheme) {
    case Scheme::Sdma:
      for (int k = 0; k < k_users; ++k) {
        std::vector<int> j;
        for (int o = 0; o < k_users; ++o) {
          if (o != k) j.push_back(cols.user_col(o));
        }
        out.push_back({k, cols.user_col(k), with_radar(j), k});
      }
      break;
    case Scheme::Noma:
      for (int k = 0; k < k_users; ++k) {
        std::vector<int> j;
        for (int later = k + 1; later < k_users; ++later) j.push_back(cols.user_col(order[later]));
        for (int t = k; t < k_users; ++t) {
          out.push_back({order[t], cols.user_col(order[k]), with_radar(j), order[k]});
        }
      }
      break;
    case Scheme::Rsma:
      for (int k = 0; k < k_users; ++k) {
        std::vector<int> all;
        for (int o = 0; o < k_users; ++o) all.push_back(cols.user_col(o));
        out.push_back({k, cols.common_col(), with_radar(all), k_users});
        std::vector<int> j;
        for (int o = 0; o < k_users; ++o) {
          if (o != k) j.push_back(cols.user_col(o));
        }
        out.push_back({k, cols.user_col(k), with_radar(j), k});
      }
      break;
    case Scheme::Tdma:
      break;
  }
  return out;
}

// Stacked normalized precoder -> physical PrecoderSet.
PrecoderSet to_precoders(const DesignProblem& p, const Columns& cols, const CMat& wn,
                         const std::vector<int>& order) {
  const double scale = std::sqrt(p.scenario.per_antenna_power());
  PrecoderSet out;
  out.scheme = p.scheme;
  out.radar_mode = p.radar.kind;
  out.radar = CMat::Zero(cols.n_tx, cols.n_tx);
  if (cols.radar > 0) out.radar = scale * wn.leftCols(cols.radar);
  if (cols.common > 0) {
    out.common = scale * wn.col(cols.common_col());
    out.common_alloc = RVec::Zero(cols.users);
  }
  out.users = scale * wn.middleCols(cols.radar + cols.common, cols.users);
  if (p.scheme == Scheme::Noma) out.decode_order = order;
  return out;
}

CMat to_normalized(const DesignProblem& p, const Columns& cols, const PrecoderSet& s) {
  const double inv = 1.0 / std::sqrt(p.scenario.per_antenna_power());
  CMat wn(cols.n_tx, cols.total());
  if (cols.radar > 0) {
    if (s.radar.rows() != cols.n_tx || s.radar.cols() != cols.n_tx) {
      throw StructuralError("initial radar precoder has the wrong shape");
    }
    wn.leftCols(cols.radar) = inv * s.radar;
  }
  if (cols.common > 0) {
    if (s.common.size() != cols.n_tx) throw StructuralError("initial common precoder missing");
    wn.col(cols.common_col()) = inv * s.common;
  }
  if (s.users.rows() != cols.n_tx || s.users.cols() != cols.users) {
    throw StructuralError("initial user precoders have the wrong shape");
  }
  wn.middleCols(cols.radar + cols.common, cols.users) = inv * s.users;
  return wn;
}

// Projects onto the power constraint in normalized units (row norms 1, or Frobenius^2 = N_T).
void normalize(CMat& wn, PowerConstraint power) {
  const auto n = wn.rows();
  if (power == PowerConstraint::TotalPower) {
    const double f = wn.norm();
    if (f > 0) wn *= std::sqrt(static_cast<double>(n)) / f;
    else wn.col(wn.cols() - 1).setOnes();
    return;
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    const double nr = wn.row(r).norm();
    if (nr > 0) {
      wn.row(r) /= nr;
    } else {
      wn.row(r).setZero();
      wn(r, wn.cols() - 1) = 1.0;
    }
  }
}

// Objective pieces evaluated exactly, with a cached Fisher operator.
class Evaluator {
 public:
  explicit Evaluator(const DesignProblem& p)
      : p_(p), op_(p.targets, p.scenario, p.scenario.cpi_length), weights_(effective_weights(p)) {}

  const FimOperator& fim_operator() const { return op_; }

  double operator()(PrecoderSet& s, double* comm, double* t, RateReport* rates) const {
    const double noise = p_.scenario.comm_noise;
    if (s.scheme == Scheme::Noma && s.decode_order.empty()) s.decode_order = default_decode_order(p_.channels);
    if (s.scheme == Scheme::Rsma) {
      if (s.common_alloc.size() != p_.scenario.n_users) s.common_alloc = RVec::Zero(p_.scenario.n_users);
      s.common_alloc.setZero();
      const RateReport pre = rates_rsma(p_.channels, s, noise);
      s.common_alloc = optimal_common_allocation(pre.common_rate, pre.private_rates, p_.objective, weights_);
    }
    RateReport r = evaluate_rates(p_.channels, s, noise);
    const double c = comm_value(r, p_.objective, weights_);
    const double tv = min_eigenvalue(op_.apply(s.covariance()));
    if (comm) *comm = c;
    if (t) *t = tv;
    if (rates) *rates = std::move(r);
    return c + p_.phi * tv;
  }

 private:
  const DesignProblem& p_;
  FimOperator op_;
  RVec weights_;
};

// Hermitian matrix variable with entrywise affine access (real and imaginary parts).
struct HermitianVars {
  int n = 0;
  std::vector<Affine> diag;
  int offdiag_base = -1;  // pairs (re, im) for a > b, row-major over the strict lower triangle

  int pair_index(int a, int b) const { return offdiag_base + 2 * (a * (a - 1) / 2 + b); }
  Affine re(int a, int b) const {
    if (a == b) return diag[static_cast<std::size_t>(a)];
    if (a < b) std::swap(a, b);
    return Affine::var(pair_index(a, b));
  }
  Affine im(int a, int b) const {
    if (a == b) return Affine(0.0);
    if (a > b) return Affine::var(pair_index(a, b) + 1);
    return Affine::var(pair_index(b, a) + 1, -1.0);
  }
};

// diag(R) fixed to one per antenna, or summing to N_T under a total-power budget.
HermitianVars add_covariance(ConeProgram& prog, int n, PowerConstraint power) {
  HermitianVars h;
  h.n = n;
  if (power == PowerConstraint::PerAntennaEquality) {
    h.diag.assign(static_cast<std::size_t>(n), Affine(1.0));
  } else {
    const int d0 = prog.add_variables(n);
    Affine sum(-static_cast<double>(n));
    for (int a = 0; a < n; ++a) {
      h.diag.push_back(Affine::var(d0 + a));
      sum.add(d0 + a, 1.0);
    }
    prog.add_equality(sum);
  }
  h.offdiag_base = prog.add_variables(n * (n - 1));
  return h;
}

// Affine form of F(R) in normalized covariance units: F = p * Re tr(K R).
struct FimForm {
  int dim = 0;
  std::vector<Affine> entries;  // row-major dim x dim, symmetric
  std::vector<double> scale;    // S_p = 1/sqrt(F_ref_pp)
  double t_scale = 1.0;         // min_p F_ref_pp
};

FimForm fim_form(const FimOperator& op, const HermitianVars& r, double per_antenna_power) {
  FimForm f;
  f.dim = op.dim();
  const int n = op.n_tx();
  const RMat ref = per_antenna_power * op.apply(CMat::Identity(n, n));
  f.t_scale = std::numeric_limits<double>::infinity();
  for (int p = 0; p < f.dim; ++p) {
    const double d = ref(p, p);
    if (!(d > 0)) throw SingularFim("reference Fisher information has a zero diagonal", d);
    f.scale.push_back(1.0 / std::sqrt(d));
    f.t_scale = std::min(f.t_scale, d);
  }
  f.entries.assign(static_cast<std::size_t>(f.dim * f.dim), Affine(0.0));
  for (int p = 0; p < f.dim; ++p) {
    for (int q = 0; q <= p; ++q) {
      const CMat k = 0.5 * (op.kernel(p, q) + op.kernel(q, p));
      Affine e(0.0);
      for (int a = 0; a < n; ++a) {
        e += (per_antenna_power * k(a, a).real()) * r.re(a, a);
        for (int b = 0; b < a; ++b) {
          e += (per_antenna_power * (k(a, b) + k(b, a)).real()) * r.re(a, b);
          e += (per_antenna_power * (k(a, b).imag() - k(b, a).imag())) * r.im(a, b);
        }
      }
      f.entries[static_cast<std::size_t>(p * f.dim + q)] = e;
      f.entries[static_cast<std::size_t>(q * f.dim + p)] = e;
    }
  }
  return f;
}

// S (F - t I) S >= 0 with t = t_scale * tau.
void add_fim_lmi(ConeProgram& prog, const FimForm& f, int tau) {
  AffineMatrix m(f.dim);
  for (int p = 0; p < f.dim; ++p) {
    for (int q = 0; q <= p; ++q) {
      Affine e = (f.scale[p] * f.scale[q]) * f.entries[static_cast<std::size_t>(p * f.dim + q)];
      if (p == q) e.add(tau, -f.t_scale * f.scale[p] * f.scale[p]);
      m.at(p, q) = e;
    }
  }
  prog.add_semidefinite(m);
}

// Real embedding [[Re Z, -Im Z], [Im Z, Re Z]] of a Hermitian Z given entrywise.
template <typename Re, typename Im>
void add_hermitian_psd(ConeProgram& prog, int n, Re re, Im im) {
  AffineMatrix m(2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const int a = i % n, b = j % n;
      const bool lower_i = i >= n, lower_j = j >= n;
      if (lower_i == lower_j) m.at(i, j) = re(a, b);
      else if (lower_i) m.at(i, j) = im(a, b);
      else m.at(i, j) = -1.0 * im(a, b);
    }
  }
  prog.add_semidefinite(m);
}

struct Subproblem {
  ConeProgram prog;
  int w0 = 0;
  HermitianVars cov;
  bool sensing = false;
  int tau = -1;
};

struct SubproblemResult {
  CMat w;     // normalized, before projection
  CMat r;     // relaxed covariance (normalized), empty when sensing is off
  double min_row_energy = 0.0;
};

class ScaBuilder {
 public:
  ScaBuilder(const DesignProblem& p, const Evaluator& eval)
      : p_(p),
        cols_(p),
        order_(p.scheme == Scheme::Noma ? default_decode_order(p.channels) : std::vector<int>{}),
        events_(build_events(p, cols_, order_)),
        weights_(effective_weights(p)),
        noise_(p.scenario.comm_noise / p.scenario.per_antenna_power()),
        eval_(eval) {}

  const Columns& columns() const { return cols_; }
  const std::vector<int>& order() const { return order_; }

  Subproblem build(const CMat& wbar, double penalty) const {
    Subproblem sp;
    ConeProgram& prog = sp.prog;
    const int n = cols_.n_tx, l_cols = cols_.total(), k_users = cols_.users;
    sp.w0 = prog.add_variables(2 * n * l_cols);
    auto wre = [&](int row, int col) { return Affine::var(sp.w0 + 2 * (col * n + row)); };
    auto wim = [&](int row, int col) { return Affine::var(sp.w0 + 2 * (col * n + row) + 1); };
    // h_u^H w_col as (Re, Im) affine pair.
    auto hw = [&](int u, int col) {
      Affine re(0.0), im(0.0);
      for (int row = 0; row < n; ++row) {
        const cd hc = std::conj(p_.channels.h(u, row));
        re += hc.real() * wre(row, col) + (-hc.imag()) * wim(row, col);
        im += hc.real() * wim(row, col) + hc.imag() * wre(row, col);
      }
      return std::pair<Affine, Affine>{re, im};
    };

    // A silent common stream has no useful linearization (every minorant is
    // zero) and would leave the common-rate constraints without interior, so
    // it is treated as absent for this step.
    const bool common_live = cols_.common && wbar.col(cols_.common_col()).squaredNorm() > 1e-20;
    const int n_slots = k_users + (common_live ? 1 : 0);
    const int r0 = prog.add_variables(n_slots);
    const int g0 = prog.add_variables(static_cast<int>(events_.size()));
    // Loose floors keep the slack variables bounded without ever binding.
    for (int s = 0; s < n_slots; ++s) prog.add_nonnegative(Affine::var(r0 + s) + 1.0);

    for (std::size_t e = 0; e < events_.size(); ++e) {
      const Event& ev = events_[e];
      if (ev.slot >= n_slots) continue;
      const CVec h = p_.channels.user(ev.receiver);
      const cd abar = h.dot(wbar.col(ev.signal));
      double dbar = noise_;
      for (int j : ev.interference) dbar += std::norm(h.dot(wbar.col(j)));
      const double ybar = 1.0 + std::norm(abar) / dbar;
      const double curv = std::norm(abar) / (dbar * dbar);
      const int gamma = g0 + static_cast<int>(e);
      prog.add_nonnegative(Affine::var(gamma) + 0.5);

      const auto [sre, sim] = hw(ev.receiver, ev.signal);
      Affine v = (2.0 * abar.real() / dbar) * sre + (2.0 * abar.imag() / dbar) * sim;
      v.add(gamma, -1.0);
      v.constant -= curv * noise_;
      if (ev.interference.empty()) {
        prog.add_nonnegative(v);
      } else {
        std::vector<Affine> cone{v + 1.0, v + (-1.0)};
        const double c2 = 2.0 * std::sqrt(curv);
        for (int j : ev.interference) {
          const auto [ire, iim] = hw(ev.receiver, j);
          cone.push_back(c2 * ire);
          cone.push_back(c2 * iim);
        }
        prog.add_second_order(cone);
      }
      // ln(1+gamma) >= ln(ybar) + 1 - ybar/(1+gamma) >= ln2 * r
      const Affine y = Affine::var(gamma) + 1.0;
      Affine u(std::log(ybar) + 1.0);
      u.add(r0 + ev.slot, -std::log(2.0));
      prog.add_second_order({y + u, Affine(2.0 * std::sqrt(ybar)), y + (-1.0) * u});
    }

    // User rates R_k (private rate plus common share for RSMA).
    std::vector<Affine> rate(static_cast<std::size_t>(k_users));
    int c0 = -1;
    if (common_live) {
      c0 = prog.add_variables(k_users);
      Affine budget = Affine::var(r0 + k_users);
      for (int k = 0; k < k_users; ++k) {
        prog.add_nonnegative(Affine::var(c0 + k));
        budget.add(c0 + k, -1.0);
      }
      prog.add_nonnegative(budget);
    }
    for (int k = 0; k < k_users; ++k) {
      rate[static_cast<std::size_t>(k)] = Affine::var(r0 + k);
      if (c0 >= 0) rate[static_cast<std::size_t>(k)].add(c0 + k, 1.0);
    }

    Affine objective(0.0);
    if (p_.objective == CommObjective::Mfr) {
      const int z = prog.add_variables(1);
      for (int k = 0; k < k_users; ++k) prog.add_nonnegative(rate[static_cast<std::size_t>(k)] + Affine::var(z, -1.0));
      objective.add(z, 1.0);
    } else {
      for (int k = 0; k < k_users; ++k) objective += weights_(k) * rate[static_cast<std::size_t>(k)];
    }

    sp.sensing = p_.phi > 0.0;
    double obj_scale = 1.0;
    if (sp.sensing) {
      sp.cov = add_covariance(prog, n, p_.power);
      const FimForm f = fim_form(eval_.fim_operator(), sp.cov, p_.scenario.per_antenna_power());
      sp.tau = prog.add_variables(1);
      add_fim_lmi(prog, f, sp.tau);
      objective.add(sp.tau, p_.phi * f.t_scale);
      obj_scale = std::max(1.0, p_.phi * f.t_scale);
      // [[R, W], [W^H, I]] >= 0
      const int dim = n + l_cols;
      const HermitianVars& cov = sp.cov;
      auto re = [&](int a, int b) -> Affine {
        if (a < n && b < n) return cov.re(a, b);
        if (a >= n && b >= n) return Affine(a == b ? 1.0 : 0.0);
        if (a < n) return wre(a, b - n);
        return wre(b, a - n);
      };
      auto im = [&](int a, int b) -> Affine {
        if (a < n && b < n) return cov.im(a, b);
        if (a >= n && b >= n) return Affine(0.0);
        if (a < n) return wim(a, b - n);
        return -1.0 * wim(b, a - n);
      };
      add_hermitian_psd(prog, dim, re, im);
    } else if (p_.power == PowerConstraint::PerAntennaEquality) {
      for (int row = 0; row < n; ++row) {
        std::vector<Affine> cone{Affine(1.0)};
        for (int col = 0; col < l_cols; ++col) {
          cone.push_back(wre(row, col));
          cone.push_back(wim(row, col));
        }
        prog.add_second_order(cone);
      }
    } else {
      std::vector<Affine> cone{Affine(std::sqrt(static_cast<double>(n)))};
      for (int col = 0; col < l_cols; ++col) {
        for (int row = 0; row < n; ++row) {
          cone.push_back(wre(row, col));
          cone.push_back(wim(row, col));
        }
      }
      prog.add_second_order(cone);
    }

    // Linearized power-shell reward 2 Re tr(Wbar^H W): keeps rows on the equality sphere.
    for (int col = 0; col < l_cols; ++col) {
      for (int row = 0; row < n; ++row) {
        objective.add(sp.w0 + 2 * (col * n + row), 2.0 * penalty * obj_scale * wbar(row, col).real());
        objective.add(sp.w0 + 2 * (col * n + row) + 1, 2.0 * penalty * obj_scale * wbar(row, col).imag());
      }
    }
    prog.add_cost((-1.0 / obj_scale) * objective);
    return sp;
  }

  SubproblemResult extract(const Subproblem& sp, const RVec& x) const {
    const int n = cols_.n_tx, l_cols = cols_.total();
    SubproblemResult out;
    out.w.resize(n, l_cols);
    for (int col = 0; col < l_cols; ++col) {
      for (int row = 0; row < n; ++row) {
        const int i = sp.w0 + 2 * (col * n + row);
        out.w(row, col) = cd(x(i), x(i + 1));
      }
    }
    if (sp.sensing) {
      out.r.resize(n, n);
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          const double re = sp.cov.re(a, b).constant + dot(sp.cov.re(a, b), x);
          const double im = sp.cov.im(a, b).constant + dot(sp.cov.im(a, b), x);
          out.r(a, b) = cd(re, im);
        }
      }
    }
    if (p_.power == PowerConstraint::PerAntennaEquality) {
      out.min_row_energy = out.w.rowwise().squaredNorm().minCoeff();
    } else {
      out.min_row_energy = out.w.squaredNorm() / n;
    }
    return out;
  }

 private:
  static double dot(const Affine& a, const RVec& x) {
    double s = 0.0;
    for (const auto& [v, c] : a.terms) s += c * x(v);
    return s;
  }

  const DesignProblem& p_;
  Columns cols_;
  std::vector<int> order_;
  std::vector<Event> events_;
  RVec weights_;
  double noise_;
  const Evaluator& eval_;
};

Solution run_sca(const DesignProblem& problem, const Evaluator& eval, CMat wbar, const SolveOptions& options) {
  const ScaBuilder builder(problem, eval);
  const Columns& cols = builder.columns();
  normalize(wbar, problem.power);

  Solution sol;
  PrecoderSet current = to_precoders(problem, cols, wbar, builder.order());
  double best = eval(current, nullptr, nullptr, nullptr);
  sol.trace.push_back(best);

  constexpr double kPenaltyMax = 1e4;
  double penalty = 1e-2;
  double gap = 0.0;
  int it = 0;
  bool converged = false;
  while (it < options.max_iters) {
    ++it;
    const Subproblem sp = builder.build(wbar, penalty);
    const conic::SolveResult res = conic::solve(sp.prog, options.conic);
    if (!res.usable(1e-6)) {
      throw InfeasibleSubproblem(std::string("convex subproblem failed: ") +
                                     std::string(conic::to_string(res.status)),
                                 it);
    }
    const SubproblemResult step = builder.extract(sp, res.x);
    CMat wnew = step.w;
    normalize(wnew, problem.power);
    PrecoderSet cand = to_precoders(problem, cols, wnew, builder.order());
    const double value = eval(cand, nullptr, nullptr, nullptr);
    const bool rows_active = step.min_row_energy >= 1.0 - 1e-6;
    if (value >= best) {
      const double gain = value - best;
      wbar = wnew;
      current = cand;
      best = value;
      sol.trace.push_back(value);
      gap = step.r.size() ? (step.r - step.w * step.w.adjoint()).norm() : 0.0;
      if (gain < options.tol_rel * std::max(1.0, std::abs(value))) {
        converged = true;
        break;
      }
    } else if (!rows_active && penalty < kPenaltyMax) {
      penalty *= 10.0;  // relaxation slack made the projected point worse
    } else {
      converged = true;  // no ascent left beyond solver precision
      break;
    }
  }

  sol.precoders = current;
  sol.covariance = current.covariance();
  sol.objective_value = eval(sol.precoders, &sol.comm_value, &sol.t_value, &sol.rates);
  sol.iterations = it;
  sol.converged = converged;
  sol.tightness_gap = gap * problem.scenario.per_antenna_power();
  sol.tightness_flagged = sol.tightness_gap > 1e-3 * problem.scenario.power_budget;
  return sol;
}

}  // namespace

double evaluate_design(const DesignProblem& problem, PrecoderSet& precoders, double* comm, double* t,
                       RateReport* rates) {
  const Evaluator eval(problem);
  return eval(precoders, comm, t, rates);
}

PrecoderSet default_initialization(const DesignProblem& problem) {
  problem.validate();
  const Columns cols(problem);
  const int n = cols.n_tx;
  CMat comm(n, cols.common + cols.users);
  CVec sum = CVec::Zero(n);
  for (int k = 0; k < cols.users; ++k) {
    const CVec h = problem.channels.user(k);
    const double nh = h.norm();
    const CVec mf = nh > 0 ? CVec(h / nh) : CVec(CVec::Ones(n) / std::sqrt(static_cast<double>(n)));
    comm.col(cols.common + k) = mf;
    sum += mf;
  }
  if (cols.common) {
    const double ns = sum.norm();
    comm.col(0) = ns > 0 ? CVec(sum / ns) : CVec(CVec::Ones(n) / std::sqrt(static_cast<double>(n)));
  }
  const double share =
      cols.radar > 0 ? problem.radar.radar_power / problem.scenario.power_budget : 0.0;
  CMat wn = CMat::Zero(n, cols.total());
  CMat radar = CMat::Zero(n, cols.radar);
  const int q_count = std::min(problem.targets.size(), cols.radar);
  for (int q = 0; q < q_count; ++q) {
    radar.col(q) = steering_vector(problem.targets[q].angle, n).conjugate();
  }
  if (problem.power == PowerConstraint::PerAntennaEquality) {
    for (int r = 0; r < n; ++r) {
      const double nc = comm.row(r).norm();
      if (nc > 0) comm.row(r) *= std::sqrt(1.0 - share) / nc;
      if (cols.radar > 0) {
        const double nr = radar.row(r).norm();
        if (nr > 0) radar.row(r) *= std::sqrt(share) / nr;
      }
    }
  } else {
    const double nn = static_cast<double>(n);
    if (comm.norm() > 0) comm *= std::sqrt((1.0 - share) * nn) / comm.norm();
    if (cols.radar > 0 && radar.norm() > 0) radar *= std::sqrt(share * nn) / radar.norm();
  }
  if (cols.radar > 0) wn.leftCols(cols.radar) = radar;
  wn.rightCols(comm.cols()) = comm;
  const std::vector<int> order =
      problem.scheme == Scheme::Noma ? default_decode_order(problem.channels) : std::vector<int>{};
  return to_precoders(problem, cols, wn, order);
}

PrecoderSet embed_in_rsma(const PrecoderSet& sdma) {
  PrecoderSet out = sdma;
  out.scheme = Scheme::Rsma;
  out.common = CVec::Zero(sdma.n_tx());
  out.common_alloc = RVec::Zero(sdma.n_users());
  out.decode_order.clear();
  return out;
}

Solution solve_sca(const DesignProblem& problem, const std::optional<PrecoderSet>& init,
                   const SolveOptions& options) {
  problem.validate();
  const Evaluator eval(problem);
  const Columns cols(problem);
  if (init) {
    if (init->scheme != problem.scheme || init->radar_mode != problem.radar.kind) {
      throw StructuralError("initial precoders do not match the problem's scheme or radar mode");
    }
    return run_sca(problem, eval, to_normalized(problem, cols, *init), options);
  }
  Solution best = run_sca(problem, eval, to_normalized(problem, cols, default_initialization(problem)), options);
  if (problem.scheme == Scheme::Rsma && options.rsma_sdma_start) {
    DesignProblem sdma = problem;
    sdma.scheme = Scheme::Sdma;
    SolveOptions inner = options;
    const Solution base = solve_sca(sdma, std::nullopt, inner);
    Solution alt = run_sca(problem, eval, to_normalized(problem, cols, embed_in_rsma(base.precoders)), options);
    alt.iterations += base.iterations;
    if (alt.objective_value > best.objective_value) best = std::move(alt);
  }
  return best;
}

SensingDesign solve_sensing_only(const Scenario& scenario, const TargetSet& targets, int symbol_count,
                                 const conic::SolverOptions& options) {
  scenario.validate();
  if (symbol_count < 1) throw std::invalid_argument("symbol_count must be >= 1");
  if (targets.empty()) throw std::invalid_argument("sensing design needs at least one target");
  const int n = scenario.n_tx;
  SensingDesign out;
  if (scenario.power_budget == 0.0) {
    out.covariance = CMat::Zero(n, n);
    out.t = 0.0;
    return out;
  }
  const FimOperator op(targets, scenario, symbol_count);
  ConeProgram prog;
  const HermitianVars cov = add_covariance(prog, n, PowerConstraint::PerAntennaEquality);
  const FimForm f = fim_form(op, cov, scenario.per_antenna_power());
  const int tau = prog.add_variables(1);
  add_fim_lmi(prog, f, tau);
  add_hermitian_psd(prog, n, [&](int a, int b) { return cov.re(a, b); },
                    [&](int a, int b) { return cov.im(a, b); });
  prog.set_cost(tau, -1.0);
  const conic::SolveResult res = conic::solve(prog, options);
  out.status = res.status;
  if (!res.usable(1e-6)) {
    throw std::runtime_error(std::string("sensing-only design failed: ") + std::string(conic::to_string(res.status)));
  }
  CMat r(n, n);
  auto value = [&](const Affine& a) {
    double s = a.constant;
    for (const auto& [v, c] : a.terms) s += c * res.x(v);
    return s;
  };
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) r(a, b) = cd(value(cov.re(a, b)), value(cov.im(a, b)));
  }
  // Project the interior-point iterate onto the PSD cone before reporting.
  Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (r + r.adjoint()));
  const RVec lam = eig.eigenvalues().cwiseMax(0.0);
  r = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();
  out.covariance = scenario.per_antenna_power() * r;
  out.t = min_eigenvalue(op.apply(out.covariance));
  return out;
}

Solution oracle_grid_search(const DesignProblem& problem, int phase_points) {
  problem.validate();
  if (problem.scenario.n_users > 1 || problem.scenario.n_tx > 2 || problem.targets.size() > 1) {
    throw UnsupportedConfiguration("oracle grid search supports K <= 1, N_T <= 2, Q <= 1 only");
  }
  if (problem.scheme != Scheme::Sdma && problem.scheme != Scheme::Noma) {
    throw UnsupportedConfiguration("oracle grid search covers single-stream schemes (SDMA, NOMA)");
  }
  if (problem.radar.kind != RadarMode::Disabled || problem.power != PowerConstraint::PerAntennaEquality) {
    throw UnsupportedConfiguration("oracle grid search needs per-antenna power and no radar sequence");
  }
  if (phase_points < 1) throw std::invalid_argument("phase_points must be >= 1");
  const Evaluator eval(problem);
  const Columns cols(problem);
  const int n = problem.scenario.n_tx;
  const std::vector<int> order =
      problem.scheme == Scheme::Noma ? default_decode_order(problem.channels) : std::vector<int>{};
  const int candidates = n == 1 ? 1 : phase_points;
  Solution best;
  best.objective_value = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < candidates; ++c) {
    CMat wn(n, 1);
    wn(0, 0) = 1.0;
    if (n == 2) wn(1, 0) = std::polar(1.0, 2.0 * kPi * c / phase_points);
    PrecoderSet s = to_precoders(problem, cols, wn, order);
    const double v = eval(s, nullptr, nullptr, nullptr);
    if (v > best.objective_value) {
      best.precoders = s;
      best.objective_value = v;
    }
  }
  best.covariance = best.precoders.covariance();
  best.objective_value = eval(best.precoders, &best.comm_value, &best.t_value, &best.rates);
  best.iterations = candidates;
  best.converged = true;
  best.trace = {best.objective_value};
  return best;
}

std::vector<Solution> sweep_phi(const DesignProblem& problem, const std::vector<double>& phi_grid,
                                const SolveOptions& options) {
  if (!std::is_sorted(phi_grid.begin(), phi_grid.end())) throw std::invalid_argument("phi grid must be ascending");
  for (double phi : phi_grid) {
    if (!(phi >= 0.0)) throw std::invalid_argument("phi grid must be nonnegative");
  }
  const std::size_t n = phi_grid.size();
  std::vector<Solution> out(n);
  std::vector<DesignProblem> probs(n, problem);
  for (std::size_t j = 0; j < n; ++j) probs[j].phi = phi_grid[j];

  auto attempt = [&](std::size_t j, const std::optional<PrecoderSet>& init) {
    try {
      return solve_sca(probs[j], init, options);
    } catch (const std::exception& e) {
      Solution failed;
      failed.success = false;
      failed.error = e.what();
      failed.objective_value = -std::numeric_limits<double>::infinity();
      return failed;
    }
  };

  std::optional<PrecoderSet> prev;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = attempt(j, prev);
    if (out[j].success) prev = out[j].precoders;
  }

  // Exchange pass: a point that scores better with its neighbour's design is
  // re-solved from that design. Once no pair improves, t is nondecreasing and
  // the comm metric nonincreasing along the grid.
  auto value_at = [&](std::size_t j, const Solution& s) {
    PrecoderSet copy = s.precoders;
    return evaluate_design(probs[j], copy);
  };
  for (std::size_t pass = 0; pass < 2 * n + 2; ++pass) {
    bool changed = false;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t nb : {j - 1, j + 1}) {
        if (nb >= n || !out[nb].success) continue;
        const double mine = out[j].success ? out[j].objective_value : -std::numeric_limits<double>::infinity();
        const double theirs = value_at(j, out[nb]);
        if (theirs > mine + 1e-9 * std::max(1.0, std::abs(mine))) {
          Solution re = attempt(j, out[nb].precoders);
          if (re.success && re.objective_value > mine) {
            out[j] = std::move(re);
            changed = true;
          }
        }
      }
    }
    if (!changed) break;
  }
  return out;
}

}  // namespace isacma
