// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include "isacma/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "isacma/rng.hpp"
#include "isacma/serialize.hpp"

namespace isacma {

std::string_view to_string(IsacMode m) { return m == IsacMode::NoIsac ? "no-isac" : "o-isac"; }

std::vector<double> default_phi_grid() {
  std::vector<double> g;
  for (int i = 0; i < 8; ++i) g.push_back(std::pow(10.0, -2.0 + 4.0 * i / 7.0));
  return g;
}

std::vector<double> default_rho_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 9; ++i) g.push_back(i / 10.0);
  return g;
}

void SweepConfig::validate() const {
  scenario.validate();
  radar.validate();
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (rosters.empty()) throw std::invalid_argument("at least one target roster is required");
  for (const auto& r : rosters) {
    if (r.empty()) throw std::invalid_argument("target rosters must be nonempty");
  }
  if (schemes.empty()) throw std::invalid_argument("scheme list must be nonempty");
  if (modes.empty()) throw std::invalid_argument("mode list must be nonempty");
  const bool no_isac = std::find(modes.begin(), modes.end(), IsacMode::NoIsac) != modes.end();
  const bool o_isac = std::find(modes.begin(), modes.end(), IsacMode::OIsac) != modes.end();
  if (no_isac) {
    if (phi_grid.empty()) throw std::invalid_argument("phi grid must be nonempty");
    if (!std::is_sorted(phi_grid.begin(), phi_grid.end()) || phi_grid.front() < 0) {
      throw std::invalid_argument("phi grid must be nonnegative and ascending");
    }
  }
  if (o_isac) {
    if (rho_grid.empty()) throw std::invalid_argument("rho grid must be nonempty");
    for (double rho : rho_grid) {
      if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho values must lie in [0, 1]");
    }
  }
  if (objective == CommObjective::Wsr && weights.size() != scenario.n_users) {
    throw std::invalid_argument("WSR weights must have length K");
  }
  for (const auto& r : rosters) (void)targets_for(r);  // rejects unknown ids and bad angles
}

Scenario SweepConfig::scenario_for(const std::vector<int>& roster) const {
  Scenario s = scenario;
  s.n_targets = static_cast<int>(roster.size());
  return s;
}

TargetSet SweepConfig::targets_for(const std::vector<int>& roster) const {
  std::vector<Target> out;
  out.reserve(roster.size());
  for (int id : roster) {
    const bool replaced = id >= 1 && id <= static_cast<int>(catalog.size());
    out.push_back(replaced ? catalog[static_cast<std::size_t>(id - 1)] : catalog_target(id));
  }
  return TargetSet(out, scenario.carrier_freq);
}

bool SweepResult::has_empty_point() const {
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      if (p.successes == 0) return true;
    }
  }
  return false;
}

namespace {

struct PresetEntry {
  const char* id;
  const char* summary;
};

constexpr PresetEntry kPresets[] = {
    {"fig6", "MFR vs RCRB, N_T=6 N_R=7 K=4 Q=1 (target 1)"},
    {"fig7", "MFR vs RCRB, N_T=3 N_R=4 K=4 Q=1 (target 1)"},
    {"fig8", "WSR vs tr(CRB), N_T=4 N_R=5 K=3 Q=1, mu=[0.4,0.3,0.3], with TDMA"},
    {"fig9", "MFR vs avg tr(CRB), N_T=4 N_R=9 K=4, rosters {1},{1,6},{1,6,7}"},
    {"fig10", "MFR vs tr(CRB), N_T=4 N_R=5 K=4 Q=2 I=256 sigma_r^2=-30 dBm, du in {0.16,0.31,0.56}"},
};

}  // namespace

std::vector<std::string> preset_ids() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.id);
  return out;
}

SweepConfig preset(const std::string& figure_id) {
  SweepConfig c;
  c.figure_id = figure_id;
  c.scenario = Scenario{};
  c.scenario.power_budget = dbm_to_watt(20.0);
  c.scenario.comm_noise = dbm_to_watt(0.0);
  c.scenario.sense_noise = dbm_to_watt(0.0);
  c.scenario.cpi_length = 1024;
  c.phi_grid = default_phi_grid();
  c.rho_grid = default_rho_grid();
  c.trials = 100;
  c.objective = CommObjective::Mfr;
  c.schemes = {Scheme::Sdma, Scheme::Noma, Scheme::Rsma};
  c.modes = {IsacMode::NoIsac, IsacMode::OIsac};
  auto dims = [&](int nt, int nr, int k) {
    c.scenario.n_tx = nt;
    c.scenario.n_rx = nr;
    c.scenario.n_users = k;
  };
  if (figure_id == "fig6") {
    dims(6, 7, 4);
    c.rosters = {{1}};
  } else if (figure_id == "fig7") {
    dims(3, 4, 4);
    c.rosters = {{1}};
  } else if (figure_id == "fig8") {
    dims(4, 5, 3);
    c.rosters = {{1}};
    c.objective = CommObjective::Wsr;
    c.weights = RVec(3);
    c.weights << 0.4, 0.3, 0.3;
    c.schemes = {Scheme::Tdma, Scheme::Sdma, Scheme::Noma, Scheme::Rsma};
  } else if (figure_id == "fig9") {
    dims(4, 9, 4);
    c.rosters = {{1}, {1, 6}, {1, 6, 7}};
    c.modes = {IsacMode::NoIsac};
  } else if (figure_id == "fig10") {
    dims(4, 5, 4);
    c.scenario.cpi_length = 256;
    c.scenario.sense_noise = dbm_to_watt(-30.0);
    c.rosters = {{5, 2}, {4, 2}, {3, 2}};
    c.modes = {IsacMode::NoIsac};
  } else {
    throw std::invalid_argument("unknown preset '" + figure_id + "'");
  }
  c.scenario.n_targets = static_cast<int>(c.rosters.front().size());
  return c;
}

void aggregate(TradeoffPoint& point) {
  point.trials = static_cast<int>(point.samples.size());
  point.successes = 0;
  double comm = 0.0, comm_sq = 0.0, trace = 0.0, avg = 0.0;
  RVec rcrb = RVec::Zero(4);
  int sensed = 0;
  for (const auto& s : point.samples) {
    if (!s.success) continue;
    ++point.successes;
    comm += s.comm;
    comm_sq += s.comm * s.comm;
    if (s.sensing_present) {
      ++sensed;
      trace += s.trace_crb;
      avg += s.avg_trace_crb;
      rcrb += s.rcrb_mean;
    }
  }
  const int n = point.successes;
  point.comm_mean = n > 0 ? comm / n : 0.0;
  if (n > 1) {
    // Two-pass variance for accuracy.
    double ss = 0.0;
    for (const auto& s : point.samples) {
      if (s.success) ss += (s.comm - point.comm_mean) * (s.comm - point.comm_mean);
    }
    point.comm_stderr = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
  } else {
    point.comm_stderr = 0.0;
  }
  point.sensing_present = sensed > 0;
  point.trace_crb_mean = sensed > 0 ? trace / sensed : 0.0;
  point.avg_trace_crb_mean = sensed > 0 ? avg / sensed : 0.0;
  point.rcrb_mean = sensed > 0 ? RVec(rcrb / sensed) : RVec(RVec::Zero(4));
}

int worker_count(int tasks) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("ISAC_MA_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return std::max(1, std::min(n, tasks));
}

namespace {

void fill_sensing(TrialSample& s, const CMat& covariance, const TargetSet& targets, const Scenario& scenario,
                  int symbols) {
  const SenseReport rep = sense_report(fim(covariance, targets, scenario, symbols));
  const int q = targets.size();
  s.sensing_present = true;
  s.trace_crb = rep.trace_crb;
  s.avg_trace_crb = rep.avg_trace_crb;
  s.rcrb_mean = RVec::Zero(4);
  for (int kind = 0; kind < 4; ++kind) {
    for (int t = 0; t < q; ++t) s.rcrb_mean(kind) += rep.rcrb(kind * q + t);
    s.rcrb_mean(kind) /= q;
  }
}

std::string roster_label(const std::vector<int>& roster) {
  std::string s = "[";
  for (std::size_t i = 0; i < roster.size(); ++i) {
    if (i) s += "-";
    s += std::to_string(roster[i]);
  }
  return s + "]";
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config) {
  config.validate();
  const bool no_isac = std::find(config.modes.begin(), config.modes.end(), IsacMode::NoIsac) != config.modes.end();
  const bool o_isac = std::find(config.modes.begin(), config.modes.end(), IsacMode::OIsac) != config.modes.end();
  const std::size_t n_rosters = config.rosters.size();
  const std::size_t n_schemes = config.schemes.size();
  const int trials = config.trials;

  // Curve skeletons: (roster, scheme, mode), TDMA only exists time-split.
  struct CurveSlot {
    std::size_t roster, scheme;
    IsacMode mode;
    std::size_t curve;
  };
  SweepResult result;
  std::vector<CurveSlot> slots;
  for (std::size_t r = 0; r < n_rosters; ++r) {
    for (std::size_t s = 0; s < n_schemes; ++s) {
      for (IsacMode mode : {IsacMode::NoIsac, IsacMode::OIsac}) {
        if ((mode == IsacMode::NoIsac && !no_isac) || (mode == IsacMode::OIsac && !o_isac)) continue;
        if (mode == IsacMode::NoIsac && config.schemes[s] == Scheme::Tdma) continue;
        TradeoffCurve c;
        c.figure_id = n_rosters > 1 ? config.figure_id + roster_label(config.rosters[r]) : config.figure_id;
        c.scheme = config.schemes[s];
        c.mode = mode;
        c.comm_metric_name = config.objective == CommObjective::Mfr ? "mfr" : "wsr";
        c.master_seed = config.master_seed;
        c.roster = config.rosters[r];
        const auto& grid = mode == IsacMode::NoIsac ? config.phi_grid : config.rho_grid;
        for (double v : grid) {
          TradeoffPoint p;
          (mode == IsacMode::NoIsac ? p.phi : p.rho) = v;
          p.samples.resize(static_cast<std::size_t>(trials));
          for (int n = 0; n < trials; ++n) p.samples[static_cast<std::size_t>(n)].trial = n;
          c.points.push_back(std::move(p));
        }
        slots.push_back({r, s, mode, result.curves.size()});
        result.curves.push_back(std::move(c));
      }
    }
  }
  auto curve_index = [&](std::size_t r, std::size_t s, IsacMode mode) -> long {
    for (const auto& sl : slots) {
      if (sl.roster == r && sl.scheme == s && sl.mode == mode) return static_cast<long>(sl.curve);
    }
    return -1;
  };

  // Time-split sensing does not depend on the channel draw: one design per (roster, rho).
  std::vector<std::vector<TrialSample>> split_sensing(n_rosters);
  if (o_isac) {
    for (std::size_t r = 0; r < n_rosters; ++r) {
      const Scenario sc = config.scenario_for(config.rosters[r]);
      const TargetSet targets = config.targets_for(config.rosters[r]);
      for (double rho : config.rho_grid) {
        TrialSample s;
        s.success = true;
        const int symbols = static_cast<int>(std::floor((1.0 - rho) * sc.cpi_length + 1e-9));
        if (symbols >= 1) {
          try {
            const SensingDesign d = solve_sensing_only(sc, targets, symbols, config.solver.conic);
            fill_sensing(s, d.covariance, targets, sc, symbols);
          } catch (const std::exception& e) {
            s.success = false;
            s.error = e.what();
          }
        }
        split_sensing[r].push_back(s);
      }
    }
  }

  const int n_tasks = static_cast<int>(n_rosters * n_schemes) * trials;
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int task = next++; task < n_tasks; task = next++) {
      const int n = task % trials;
      const std::size_t s = static_cast<std::size_t>(task / trials) % n_schemes;
      const std::size_t r = static_cast<std::size_t>(task / trials) / n_schemes;
      const auto tn = static_cast<std::size_t>(n);
      const Scenario sc = config.scenario_for(config.rosters[r]);
      const TargetSet targets = config.targets_for(config.rosters[r]);
      const ChannelSet channels = sample_channels(derive_seed(config.master_seed, tn), sc);
      const Scheme scheme = config.schemes[s];

      DesignProblem prob;
      prob.scheme = scheme == Scheme::Tdma ? Scheme::Sdma : scheme;
      prob.radar = config.radar;
      prob.objective = config.objective;
      prob.weights = config.weights;
      prob.channels = channels;
      prob.targets = targets;
      prob.scenario = sc;

      const long nc = curve_index(r, s, IsacMode::NoIsac);
      if (nc >= 0) {
        auto& curve = result.curves[static_cast<std::size_t>(nc)];
        std::vector<Solution> sols;
        std::string err;
        try {
          sols = sweep_phi(prob, config.phi_grid, config.solver);
        } catch (const std::exception& e) {
          err = e.what();
        }
        for (std::size_t j = 0; j < curve.points.size(); ++j) {
          TrialSample& smp = curve.points[j].samples[tn];
          if (j >= sols.size() || !sols[j].success) {
            smp.error = j < sols.size() ? sols[j].error : err;
            continue;
          }
          try {
            smp.comm = sols[j].comm_value;
            smp.t_value = sols[j].t_value;
            fill_sensing(smp, sols[j].covariance, targets, sc, sc.cpi_length);
            smp.success = true;
          } catch (const std::exception& e) {
            smp.success = false;
            smp.error = e.what();
          }
        }
      }

      const long oc = curve_index(r, s, IsacMode::OIsac);
      if (oc >= 0) {
        auto& curve = result.curves[static_cast<std::size_t>(oc)];
        double comm_full = 0.0;
        std::string err;
        bool ok = true;
        if (scheme != Scheme::Tdma) {
          try {
            DesignProblem comm_only = prob;
            comm_only.phi = 0.0;
            comm_full = solve_sca(comm_only, std::nullopt, config.solver).comm_value;
          } catch (const std::exception& e) {
            ok = false;
            err = e.what();
          }
        }
        const RVec weights = config.objective == CommObjective::Wsr ? config.weights : RVec(RVec::Ones(sc.n_users));
        for (std::size_t j = 0; j < curve.points.size(); ++j) {
          const double rho = config.rho_grid[j];
          TrialSample smp = split_sensing[r][j];
          smp.trial = n;
          if (!ok) {
            smp.success = false;
            smp.error = err;
          } else if (smp.success) {
            smp.comm = scheme == Scheme::Tdma
                           ? comm_value(rates_tdma(channels, sc, rho), config.objective, weights)
                           : rho * comm_full;
          }
          curve.points[j].samples[tn] = smp;
        }
      }
    }
  };

  const int workers = worker_count(n_tasks);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& c : result.curves) {
    for (auto& p : c.points) aggregate(p);
  }
  return result;
}

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string format_csv(const std::vector<TradeoffCurve>& curves) {
  std::ostringstream out;
  out << "figure_id,scheme,isac_mode,phi,rho,trials,successes,comm_metric_name,comm_mean,comm_stderr,"
         "trace_crb_mean,avg_trace_crb_mean,rcrb_theta,rcrb_alpha_re,rcrb_alpha_im,rcrb_doppler,master_seed\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      const bool any = p.successes > 0;
      const bool sensed = any && p.sensing_present;
      out << c.figure_id << ',' << to_string(c.scheme) << ',' << to_string(c.mode) << ',' << num(p.phi) << ','
          << num(p.rho) << ',' << p.trials << ',' << p.successes << ',' << c.comm_metric_name << ','
          << (any ? num(p.comm_mean) : "") << ',' << (any ? num(p.comm_stderr) : "") << ','
          << (sensed ? num(p.trace_crb_mean) : "") << ',' << (sensed ? num(p.avg_trace_crb_mean) : "");
      for (int k = 0; k < 4; ++k) out << ',' << (sensed ? num(p.rcrb_mean(k)) : "");
      out << ',' << c.master_seed << '\n';
    }
  }
  return out.str();
}

std::string format_svg(const std::vector<TradeoffCurve>& curves) {
  constexpr double kW = 640, kH = 420, kPad = 60;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      if (p.successes == 0 || !p.sensing_present || !(p.trace_crb_mean > 0)) continue;
      const double x = std::log10(p.trace_crb_mean);
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, p.comm_mean);
      ymax = std::max(ymax, p.comm_mean);
    }
  }
  if (!(xmax > xmin)) { xmin -= 1; xmax += 1; }
  if (!(ymax > ymin)) { ymin -= 1; ymax += 1; }
  auto px = [&](double x) { return kPad + (x - xmin) / (xmax - xmin) * (kW - 2 * kPad); };
  auto py = [&](double y) { return kH - kPad - (y - ymin) / (ymax - ymin) * (kH - 2 * kPad); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\">log10 tr(CRB)</text>\n";
  out << "<text x=\"15\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 15," << kH / 2
      << ")\" text-anchor=\"middle\">comm metric</text>\n";
  std::size_t idx = 0;
  for (const auto& c : curves) {
    const char* color = kColors[idx % (sizeof kColors / sizeof kColors[0])];
    std::ostringstream pts;
    for (const auto& p : c.points) {
      if (p.successes == 0 || !p.sensing_present || !(p.trace_crb_mean > 0)) continue;
      const double x = px(std::log10(p.trace_crb_mean)), y = py(p.comm_mean);
      pts << x << ',' << y << ' ';
      out << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"" << pts.str() << "\"/>\n";
    out << "<text x=\"" << kW - kPad - 150 << "\" y=\"" << kPad + 16 * idx << "\" fill=\"" << color << "\">"
        << c.figure_id << ' ' << to_string(c.scheme) << ' ' << to_string(c.mode) << "</text>\n";
    ++idx;
  }
  out << "</svg>\n";
  return out.str();
}

void emit_results(const std::vector<TradeoffCurve>& curves, const std::string& path, OutputFormat format) {
  std::string body;
  switch (format) {
    case OutputFormat::Csv: body = format_csv(curves); break;
    case OutputFormat::Json: body = curves_to_json(curves).dump(2) + "\n"; break;
    case OutputFormat::Svg: body = format_svg(curves); break;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << body;
  if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace isacma
