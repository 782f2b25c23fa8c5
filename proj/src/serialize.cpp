// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include "isacma/serialize.hpp"

#include <cctype>
#include <cmath>

namespace isacma {

namespace {

std::string lower_trimmed(std::string s) {
  std::string out;
  for (char ch : s) {
    if (!std::isspace(static_cast<unsigned char>(ch))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

// Splits "20dbm" into (20, "dbm").
std::pair<double, std::string> split_unit(const std::string& text) {
  const std::string t = lower_trimmed(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  return {v, t.substr(used)};
}

Json complex_matrix(const CMat& m) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json rr = Json::array(), ii = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"re", re}, {"im", im}};
}

Json vec(const RVec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v(i)) ? Json(v(i)) : Json(nullptr));
  return a;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

double parse_power(const Json& value) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) throw std::invalid_argument("power must be a number (W) or a string like '20dBm'");
  const auto [v, unit] = split_unit(value.get<std::string>());
  if (unit == "dbm") return dbm_to_watt(v);
  if (unit == "dbw") return std::pow(10.0, v / 10.0);
  if (unit == "w" || unit.empty()) return v;
  if (unit == "mw") return v * 1e-3;
  throw std::invalid_argument("unknown power unit '" + unit + "'");
}

double parse_ratio(const Json& value) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) throw std::invalid_argument("ratio must be a number or a string like '3dB'");
  const auto [v, unit] = split_unit(value.get<std::string>());
  if (unit == "db") return std::pow(10.0, v / 10.0);
  if (unit.empty()) return v;
  throw std::invalid_argument("unknown ratio unit '" + unit + "'");
}

Json to_json(const Scenario& s) {
  return {{"n_tx", s.n_tx},
          {"n_rx", s.n_rx},
          {"n_users", s.n_users},
          {"n_targets", s.n_targets},
          {"power_budget_dbm", watt_to_dbm(s.power_budget)},
          {"comm_noise_dbm", watt_to_dbm(s.comm_noise)},
          {"sense_noise_dbm", watt_to_dbm(s.sense_noise)},
          {"cpi_length", s.cpi_length},
          {"carrier_freq", s.carrier_freq},
          {"symbol_period", s.symbol_period},
          {"amp_efficiency", s.amp_efficiency},
          {"circuit_power", s.circuit_power}};
}

Scenario scenario_from_json(const Json& j, Scenario s) {
  if (!j.is_object()) throw std::invalid_argument("scenario must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "n_tx") s.n_tx = v.get<int>();
    else if (key == "n_rx") s.n_rx = v.get<int>();
    else if (key == "n_users") s.n_users = v.get<int>();
    else if (key == "n_targets") s.n_targets = v.get<int>();
    else if (key == "power_budget") s.power_budget = parse_power(v);
    else if (key == "power_budget_dbm") s.power_budget = v.is_number() ? dbm_to_watt(v.get<double>()) : parse_power(v);
    else if (key == "comm_noise") s.comm_noise = parse_power(v);
    else if (key == "comm_noise_dbm") s.comm_noise = v.is_number() ? dbm_to_watt(v.get<double>()) : parse_power(v);
    else if (key == "sense_noise") s.sense_noise = parse_power(v);
    else if (key == "sense_noise_dbm") s.sense_noise = v.is_number() ? dbm_to_watt(v.get<double>()) : parse_power(v);
    else if (key == "cpi_length") s.cpi_length = v.get<int>();
    else if (key == "carrier_freq") s.carrier_freq = v.get<double>();
    else if (key == "symbol_period") s.symbol_period = v.get<double>();
    else if (key == "amp_efficiency") s.amp_efficiency = parse_ratio(v);
    else if (key == "circuit_power") s.circuit_power = parse_power(v);
    else throw std::invalid_argument("unknown scenario key '" + key + "'");
  }
  return s;
}

Json to_json(const RateReport& r) {
  Json j = {{"sinr", vec(r.sinr)}, {"rates", vec(r.rates)}};
  if (r.common_sinr.size() > 0) {
    j["common_sinr"] = vec(r.common_sinr);
    j["private_rates"] = vec(r.private_rates);
    j["common_rate"] = r.common_rate;
    j["common_feasible"] = r.common_feasible;
  }
  return j;
}

Json to_json(const SenseReport& r) {
  Json crb = Json::array();
  for (Eigen::Index i = 0; i < r.crb.rows(); ++i) crb.push_back(vec(r.crb.row(i).transpose()));
  return {{"crb", crb},
          {"rcrb", vec(r.rcrb)},
          {"trace_crb", r.trace_crb},
          {"avg_trace_crb", r.avg_trace_crb},
          {"radar_snr", finite_or_null(r.radar_snr)},
          {"min_eigenvalue", r.min_eigenvalue},
          {"condition", r.condition}};
}

Json to_json(const PrecoderSet& p) {
  Json j = {{"scheme", to_string(p.scheme)}, {"radar_mode", to_string(p.radar_mode)}, {"users", complex_matrix(p.users)}};
  if (p.radar.size() > 0) j["radar"] = complex_matrix(p.radar);
  if (p.common.size() > 0) {
    j["common"] = complex_matrix(p.common);
    j["common_alloc"] = vec(p.common_alloc);
  }
  if (!p.decode_order.empty()) j["decode_order"] = p.decode_order;
  return j;
}

Json to_json(const Solution& s) {
  return {{"success", s.success},
          {"error", s.error},
          {"objective_value", s.objective_value},
          {"comm_value", s.comm_value},
          {"t_value", s.t_value},
          {"iterations", s.iterations},
          {"converged", s.converged},
          {"tightness_gap", s.tightness_gap},
          {"tightness_flagged", s.tightness_flagged},
          {"trace", s.trace},
          {"rates", to_json(s.rates)},
          {"precoders", to_json(s.precoders)}};
}

Json to_json(const SweepConfig& c) {
  Json schemes = Json::array(), modes = Json::array();
  for (auto s : c.schemes) schemes.push_back(to_string(s));
  for (auto m : c.modes) modes.push_back(to_string(m));
  Json j = {{"figure_id", c.figure_id},
            {"scenario", to_json(c.scenario)},
            {"rosters", c.rosters},
            {"schemes", schemes},
            {"modes", modes},
            {"phi_grid", c.phi_grid},
            {"rho_grid", c.rho_grid},
            {"trials", c.trials},
            {"master_seed", c.master_seed},
            {"objective", c.objective == CommObjective::Mfr ? "mfr" : "wsr"},
            {"weights", vec(c.weights)},
            {"radar", {{"mode", to_string(c.radar.kind)}, {"power", c.radar.radar_power}}},
            {"solver", {{"tol_rel", c.solver.tol_rel}, {"max_iters", c.solver.max_iters}}}};
  if (!c.catalog.empty()) {
    Json angles = Json::array(), velocities = Json::array(), reflections = Json::array();
    for (const auto& t : c.catalog) {
      angles.push_back(rad_to_deg(t.angle));
      velocities.push_back(t.velocity);
      reflections.push_back({t.reflection.real(), t.reflection.imag()});
    }
    j["targets"] = {{"angles_deg", angles}, {"velocities", velocities}, {"reflections", reflections}};
  }
  return j;
}

std::vector<Target> targets_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("targets must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key != "angles_deg" && key != "velocities" && key != "reflections") {
      throw std::invalid_argument("unknown targets key '" + key + "'");
    }
  }
  if (!j.contains("angles_deg")) throw std::invalid_argument("targets need 'angles_deg'");
  const auto angles = j.at("angles_deg").get<std::vector<double>>();
  std::vector<Target> out(angles.size());
  for (std::size_t q = 0; q < angles.size(); ++q) out[q].angle = deg_to_rad(angles[q]);
  if (j.contains("velocities")) {
    const auto v = j.at("velocities").get<std::vector<double>>();
    if (v.size() != out.size()) throw std::invalid_argument("targets.velocities must match angles_deg");
    for (std::size_t q = 0; q < v.size(); ++q) out[q].velocity = v[q];
  }
  if (j.contains("reflections")) {
    const auto& r = j.at("reflections");
    if (!r.is_array() || r.size() != out.size()) {
      throw std::invalid_argument("targets.reflections must match angles_deg");
    }
    for (std::size_t q = 0; q < out.size(); ++q) {
      const auto& e = r[q];
      out[q].reflection = e.is_array() ? cd(e.at(0).get<double>(), e.at(1).get<double>()) : cd(e.get<double>(), 0.0);
    }
  }
  return out;
}

SweepConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  SweepConfig c;
  if (j.contains("preset")) c = preset(j.at("preset").get<std::string>());
  for (const auto& [key, v] : j.items()) {
    if (key == "preset") continue;
    if (key == "figure_id") c.figure_id = v.get<std::string>();
    else if (key == "scenario") c.scenario = scenario_from_json(v, c.scenario);
    else if (key == "rosters") c.rosters = v.get<std::vector<std::vector<int>>>();
    else if (key == "schemes") {
      c.schemes.clear();
      for (const auto& s : v) c.schemes.push_back(parse_scheme(s.get<std::string>()));
    } else if (key == "modes") {
      c.modes.clear();
      for (const auto& m : v) {
        const auto t = m.get<std::string>();
        if (t == "no-isac") c.modes.push_back(IsacMode::NoIsac);
        else if (t == "o-isac") c.modes.push_back(IsacMode::OIsac);
        else throw std::invalid_argument("unknown mode '" + t + "'");
      }
    } else if (key == "phi_grid") c.phi_grid = v.get<std::vector<double>>();
    else if (key == "rho_grid") c.rho_grid = v.get<std::vector<double>>();
    else if (key == "trials") c.trials = v.get<int>();
    else if (key == "master_seed") c.master_seed = v.get<std::uint64_t>();
    else if (key == "objective") {
      const auto t = v.get<std::string>();
      if (t == "mfr") c.objective = CommObjective::Mfr;
      else if (t == "wsr") c.objective = CommObjective::Wsr;
      else throw std::invalid_argument("objective must be 'wsr' or 'mfr'");
    } else if (key == "weights") {
      const auto w = v.get<std::vector<double>>();
      c.weights = Eigen::Map<const RVec>(w.data(), static_cast<Eigen::Index>(w.size()));
    } else if (key == "radar") {
      if (v.contains("mode")) c.radar.kind = parse_radar_mode(v.at("mode").get<std::string>());
      if (v.contains("power")) c.radar.radar_power = parse_power(v.at("power"));
    } else if (key == "targets") {
      c.catalog = targets_from_json(v);
    } else if (key == "solver") {
      if (v.contains("tol_rel")) c.solver.tol_rel = v.at("tol_rel").get<double>();
      if (v.contains("max_iters")) c.solver.max_iters = v.at("max_iters").get<int>();
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  c.scenario.n_targets = c.rosters.empty() ? c.scenario.n_targets : static_cast<int>(c.rosters.front().size());
  return c;
}

Json curves_to_json(const std::vector<TradeoffCurve>& curves) {
  Json out = Json::array();
  for (const auto& c : curves) {
    Json pts = Json::array();
    for (const auto& p : c.points) {
      const bool any = p.successes > 0;
      const bool sensed = any && p.sensing_present;
      pts.push_back({{"phi", finite_or_null(p.phi)},
                     {"rho", finite_or_null(p.rho)},
                     {"trials", p.trials},
                     {"successes", p.successes},
                     {"comm_mean", any ? Json(p.comm_mean) : Json(nullptr)},
                     {"comm_stderr", any ? Json(p.comm_stderr) : Json(nullptr)},
                     {"trace_crb_mean", sensed ? Json(p.trace_crb_mean) : Json(nullptr)},
                     {"avg_trace_crb_mean", sensed ? Json(p.avg_trace_crb_mean) : Json(nullptr)},
                     {"rcrb_mean", sensed ? vec(p.rcrb_mean) : Json(nullptr)}});
    }
    out.push_back({{"figure_id", c.figure_id},
                   {"scheme", to_string(c.scheme)},
                   {"isac_mode", to_string(c.mode)},
                   {"comm_metric_name", c.comm_metric_name},
                   {"master_seed", c.master_seed},
                   {"roster", c.roster},
                   {"points", pts}});
  }
  return out;
}

void apply_override(Json& j, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) throw std::invalid_argument("override key must be nonempty");
  Json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw std::invalid_argument("malformed override key '" + dotted_key + "'");
    if (dot == std::string::npos) {
      Json parsed = Json::parse(value, nullptr, false);
      (*node)[part] = parsed.is_discarded() ? Json(value) : parsed;
      return;
    }
    if (!node->contains(part)) (*node)[part] = Json::object();
    node = &(*node)[part];
    if (!node->is_object()) throw std::invalid_argument("override key '" + dotted_key + "' crosses a non-object");
    start = dot + 1;
  }
}

}  // namespace isacma
