// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include "isacma/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>

#include "CLI11.hpp"

#include "isacma/rng.hpp"
#include "isacma/serialize.hpp"

namespace isacma {

namespace {

struct ConfigFlags {
  std::string preset_id;
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  auto* p = cmd->add_option("--preset", f.preset_id, "figure preset (fig6..fig10)");
  auto* c = cmd->add_option("--config", f.config_path, "JSON sweep configuration file");
  p->excludes(c);
  cmd->add_option("--set", f.overrides, "dotted-key override, e.g. scenario.n_tx=4 (repeatable)");
  cmd->add_option("--seed", f.seed, "master seed");
}

// Bad invocations that CLI11 cannot express map to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SweepConfig load_config(const ConfigFlags& f, bool required) {
  if (required && f.preset_id.empty() == f.config_path.empty()) {
    throw UsageError("exactly one of --preset or --config is required");
  }
  SweepConfig cfg;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw std::invalid_argument("cannot read config '" + f.config_path + "'");
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    cfg = config_from_json(j);
  } else {
    cfg = preset(f.preset_id.empty() ? "fig6" : f.preset_id);
  }
  if (!f.overrides.empty()) {
    Json j = to_json(cfg);
    for (const auto& kv : f.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      apply_override(j, kv.substr(0, eq), kv.substr(eq + 1));
    }
    try {
      cfg = config_from_json(j);
    } catch (const Json::exception& e) {
      throw std::invalid_argument(std::string("bad override value: ") + e.what());
    }
  }
  if (f.seed) cfg.master_seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  cfg.validate();
  return cfg;
}

RadarSequenceMode radar_from_flags(const std::string& mode, const std::string& power, const Scenario& sc) {
  RadarSequenceMode r;
  r.kind = parse_radar_mode(mode);
  if (r.kind != RadarMode::Disabled) {
    r.radar_power = power.empty() ? 0.1 * sc.power_budget : parse_power(Json(power));
  }
  return r;
}

CommObjective parse_objective(const std::string& s) {
  if (s == "wsr") return CommObjective::Wsr;
  if (s == "mfr") return CommObjective::Mfr;
  throw std::invalid_argument("objective must be 'wsr' or 'mfr'");
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << body;
}

// Central-difference echo derivatives give an independent check of the analytic FIM.
RMat finite_difference_fim(const CMat& covariance, const TargetSet& targets, const Scenario& sc, int symbols) {
  const RVec xi = targets.parameter_vector();
  const auto dim = xi.size();
  RMat f = RMat::Zero(dim, dim);
  std::vector<CMat> d(static_cast<std::size_t>(dim));
  for (int i = 1; i <= symbols; ++i) {
    for (Eigen::Index p = 0; p < dim; ++p) {
      const double h = 1e-5 * std::max(1.0, std::abs(xi(p)));
      RVec up = xi, dn = xi;
      up(p) += h;
      dn(p) -= h;
      d[static_cast<std::size_t>(p)] =
          (echo_response(targets.with_parameters(up), sc, i) - echo_response(targets.with_parameters(dn), sc, i)) /
          (2.0 * h);
    }
    for (Eigen::Index p = 0; p < dim; ++p) {
      for (Eigen::Index q = 0; q < dim; ++q) {
        f(p, q) += (d[static_cast<std::size_t>(p)].adjoint() * d[static_cast<std::size_t>(q)] * covariance)
                       .trace()
                       .real();
      }
    }
  }
  return f * (2.0 / sc.sense_noise);
}

int cmd_presets(std::ostream& out) {
  out << std::left << std::setw(7) << "id" << std::setw(5) << "N_T" << std::setw(5) << "N_R" << std::setw(4) << "K"
      << std::setw(18) << "targets" << std::setw(6) << "I" << std::setw(12) << "sigma_r^2" << std::setw(6) << "obj"
      << "schemes\n";
  for (const auto& id : preset_ids()) {
    const SweepConfig c = preset(id);
    std::string rosters;
    for (const auto& r : c.rosters) {
      rosters += "{";
      for (std::size_t i = 0; i < r.size(); ++i) rosters += (i ? "," : "") + std::to_string(r[i]);
      rosters += "}";
    }
    std::string schemes;
    for (auto s : c.schemes) schemes += std::string(schemes.empty() ? "" : ",") + std::string(to_string(s));
    std::ostringstream noise;
    noise << watt_to_dbm(c.scenario.sense_noise) << " dBm";
    out << std::setw(7) << id << std::setw(5) << c.scenario.n_tx << std::setw(5) << c.scenario.n_rx << std::setw(4)
        << c.scenario.n_users << std::setw(18) << rosters << std::setw(6) << c.scenario.cpi_length << std::setw(12)
        << noise.str() << std::setw(6) << (c.objective == CommObjective::Mfr ? "mfr" : "wsr") << schemes;
    if (c.objective == CommObjective::Wsr) {
      out << "  mu=[";
      for (Eigen::Index k = 0; k < c.weights.size(); ++k) out << (k ? "," : "") << c.weights(k);
      out << "]";
    }
    out << "\n";
  }
  out << "common: P_T=20 dBm, sigma_c^2=0 dBm, |alpha|=1, trials=100, phi grid 8 log points in [1e-2,1e2], "
         "rho grid 0.1..0.9\n";
  return kExitOk;
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"isac-ma: multiple-access ISAC precoder design and trade-off sweeps"};
  app.require_subcommand(1, 1);

  ConfigFlags solve_cfg, sweep_cfg, sense_cfg;
  std::string scheme = "sdma", objective, radar_mode = "off", radar_power, out_path;
  double phi = 0.0;
  int roster_index = 0;
  bool dump_rates = false;
  auto* solve = app.add_subcommand("solve", "run one joint design and print the solution JSON");
  add_config_flags(solve, solve_cfg);
  solve->add_option("--scheme", scheme, "sdma | noma | rsma")->check(CLI::IsMember({"sdma", "noma", "rsma"}));
  solve->add_option("--phi", phi, "sensing weight (>= 0)");
  solve->add_option("--objective", objective, "wsr | mfr")->check(CLI::IsMember({"wsr", "mfr"}));
  solve->add_option("--radar-mode", radar_mode, "off | sic | nosic")->check(CLI::IsMember({"off", "sic", "nosic"}));
  solve->add_option("--radar-power", radar_power, "radar sequence power, e.g. 10dBm");
  solve->add_option("--roster", roster_index, "index into the preset's target rosters");
  solve->add_option("--out", out_path, "also write the JSON here");
  solve->add_flag("--dump-rates", dump_rates, "include per-user rates and the CRB report");

  std::string sweep_out = ".";
  std::vector<std::string> sweep_schemes;
  auto* sweep = app.add_subcommand("sweep", "run a Monte-Carlo trade-off sweep and emit csv/json/svg");
  add_config_flags(sweep, sweep_cfg);
  sweep->add_option("--trials", sweep_cfg.trials, "channel realizations");
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--scheme", sweep_schemes, "restrict to these schemes (repeatable)")
      ->check(CLI::IsMember({"tdma", "sdma", "noma", "rsma"}));

  int symbols = 0;
  auto* sense = app.add_subcommand("sensing-only", "solve the sensing-only covariance design");
  add_config_flags(sense, sense_cfg);
  sense->add_option("--symbols", symbols, "symbols used for sensing (default: the CPI length)");
  sense->add_option("--roster", roster_index, "index into the preset's target rosters");

  double oracle_phi = 1.0;
  std::uint64_t oracle_seed = 1;
  int oracle_points = 720;
  auto* oracle = app.add_subcommand("oracle", "compare the SCA design with a phase-grid search (N_T=2, K=1)");
  oracle->add_option("--phi", oracle_phi, "sensing weight");
  oracle->add_option("--seed", oracle_seed, "channel seed");
  oracle->add_option("--points", oracle_points, "phase grid size")->check(CLI::PositiveNumber);

  int fim_instances = 20;
  std::uint64_t fim_seed = 1;
  auto* fimcheck = app.add_subcommand("fim-check", "analytic vs finite-difference Fisher information");
  fimcheck->add_option("--instances", fim_instances, "random instances")->check(CLI::PositiveNumber);
  fimcheck->add_option("--seed", fim_seed, "seed");

  auto* presets = app.add_subcommand("presets", "list the figure presets");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*presets) return cmd_presets(out);

    if (*solve) {
      const SweepConfig cfg = load_config(solve_cfg, true);
      if (roster_index < 0 || roster_index >= static_cast<int>(cfg.rosters.size())) {
        throw std::invalid_argument("roster index out of range");
      }
      const auto& roster = cfg.rosters[static_cast<std::size_t>(roster_index)];
      DesignProblem p;
      p.scenario = cfg.scenario_for(roster);
      p.scheme = parse_scheme(scheme);
      p.phi = phi;
      p.objective = objective.empty() ? cfg.objective : parse_objective(objective);
      p.weights = p.objective == CommObjective::Wsr
                      ? (cfg.weights.size() == p.scenario.n_users ? cfg.weights
                                                                  : RVec(RVec::Constant(p.scenario.n_users, 1.0 / p.scenario.n_users)))
                      : RVec();
      p.radar = radar_from_flags(radar_mode, radar_power, p.scenario);
      p.targets = cfg.targets_for(roster);
      p.channels = sample_channels(derive_seed(cfg.master_seed, 0), p.scenario);
      Solution s;
      try {
        s = solve_sca(p, std::nullopt, cfg.solver);
      } catch (const InfeasibleSubproblem& e) {
        err << "solver failed at iteration " << e.iteration() << ": " << e.what() << "\n";
        return kExitNoSuccess;
      }
      Json j = to_json(s);
      j["scheme"] = scheme;
      j["phi"] = phi;
      j["seed"] = cfg.master_seed;
      if (dump_rates) {
        j["rate_report"] = to_json(s.rates);
        try {
          j["sense_report"] = to_json(sense_report(fim(s.covariance, p.targets, p.scenario, p.scenario.cpi_length),
                                                   p.targets, p.scenario));
        } catch (const SingularFim& e) {
          j["sense_report"] = {{"error", e.what()}};
        }
      }
      const std::string body = j.dump(2) + "\n";
      out << body;
      if (!out_path.empty()) write_file(out_path, body);
      return kExitOk;
    }

    if (*sweep) {
      SweepConfig cfg = load_config(sweep_cfg, true);
      if (!sweep_schemes.empty()) {
        cfg.schemes.clear();
        for (const auto& s : sweep_schemes) cfg.schemes.push_back(parse_scheme(s));
      }
      const SweepResult res = run_sweep(cfg);
      std::filesystem::create_directories(sweep_out);
      const std::filesystem::path base = std::filesystem::path(sweep_out) / cfg.figure_id;
      emit_results(res.curves, base.string() + ".csv", OutputFormat::Csv);
      emit_results(res.curves, base.string() + ".json", OutputFormat::Json);
      emit_results(res.curves, base.string() + ".svg", OutputFormat::Svg);
      for (const auto& c : res.curves) {
        out << c.figure_id << ' ' << to_string(c.scheme) << ' ' << to_string(c.mode) << ":";
        for (const auto& pt : c.points) out << ' ' << pt.successes << '/' << pt.trials;
        out << "\n";
      }
      out << "wrote " << base.string() << ".{csv,json,svg}\n";
      if (res.has_empty_point()) {
        err << "at least one grid point had zero successful trials\n";
        return kExitNoSuccess;
      }
      return kExitOk;
    }

    if (*sense) {
      const SweepConfig cfg = load_config(sense_cfg, false);
      if (roster_index < 0 || roster_index >= static_cast<int>(cfg.rosters.size())) {
        throw std::invalid_argument("roster index out of range");
      }
      const auto& roster = cfg.rosters[static_cast<std::size_t>(roster_index)];
      const Scenario sc = cfg.scenario_for(roster);
      const TargetSet targets = cfg.targets_for(roster);
      const int n_sym = symbols > 0 ? symbols : sc.cpi_length;
      const SensingDesign d = solve_sensing_only(sc, targets, n_sym);
      Json cov = Json::array();
      for (Eigen::Index r = 0; r < d.covariance.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < d.covariance.cols(); ++c) {
          row.push_back({d.covariance(r, c).real(), d.covariance(r, c).imag()});
        }
        cov.push_back(row);
      }
      Json j = {{"t", d.t}, {"symbols", n_sym}, {"status", conic::to_string(d.status)}, {"covariance", cov}};
      if (d.t > 0) j["sense_report"] = to_json(sense_report(fim(d.covariance, targets, sc, n_sym), targets, sc));
      out << j.dump(2) << "\n";
      return kExitOk;
    }

    if (*oracle) {
      Scenario sc;
      sc.n_tx = 2;
      sc.n_rx = 2;
      sc.n_users = 1;
      sc.n_targets = 1;
      DesignProblem p;
      p.scenario = sc;
      p.scheme = Scheme::Sdma;
      p.phi = oracle_phi;
      p.objective = CommObjective::Mfr;
      p.targets = catalog_targets({1}, sc.carrier_freq);
      p.channels = sample_channels(derive_seed(oracle_seed, 0), sc);
      const Solution grid = oracle_grid_search(p, oracle_points);
      const Solution sca = solve_sca(p);
      out << Json{{"phi", oracle_phi},
                  {"seed", oracle_seed},
                  {"oracle_objective", grid.objective_value},
                  {"sca_objective", sca.objective_value},
                  {"relative_shortfall", (grid.objective_value - sca.objective_value) /
                                             std::max(1e-300, std::abs(grid.objective_value))}}
                 .dump(2)
          << "\n";
      return kExitOk;
    }

    if (*fimcheck) {
      Rng rng(fim_seed);
      double worst = 0.0;
      for (int n = 0; n < fim_instances; ++n) {
        Scenario sc;
        sc.n_tx = 1 + static_cast<int>(rng.uniform() * 6);
        sc.n_rx = 1 + static_cast<int>(rng.uniform() * 9);
        sc.n_targets = 1 + static_cast<int>(rng.uniform() * 3);
        sc.cpi_length = 16 + static_cast<int>(rng.uniform() * 48);
        std::vector<Target> tv;
        for (int q = 0; q < sc.n_targets; ++q) {
          tv.push_back({rng.uniform(-1.2, 1.2), cd(rng.normal(), rng.normal()), rng.uniform(-30.0, 30.0)});
        }
        const TargetSet targets(tv, sc.carrier_freq);
        CMat a(sc.n_tx, sc.n_tx);
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = cd(rng.normal(), rng.normal());
        CMat r = a * a.adjoint();
        r *= sc.power_budget / r.trace().real();
        const RMat exact = fim(r, targets, sc, sc.cpi_length).f;
        const RMat fd = finite_difference_fim(r, targets, sc, sc.cpi_length);
        worst = std::max(worst, (exact - fd).norm() / exact.norm());
      }
      out << "fim-check: " << fim_instances << " instances, max relative error " << std::scientific
          << std::setprecision(3) << worst << "\n";
      return worst <= 1e-4 ? kExitOk : kExitFailure;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace isacma
