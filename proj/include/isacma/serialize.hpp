// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "isacma/bench.hpp"

namespace isacma {

using Json = nlohmann::json;

/// Parses "20dBm", "-30 dBm", "3dB" (ratio) or a plain number. dBm yields watts.
double parse_power(const Json& value);
double parse_ratio(const Json& value);

Json to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j, Scenario base = {});

Json to_json(const RateReport& r);
Json to_json(const SenseReport& r);
Json to_json(const PrecoderSet& p);
Json to_json(const Solution& s);

/// {"angles_deg": [...], "velocities": [...], "reflections": [[re, im], ...]};
/// velocities default to 0 and reflections to 1.
std::vector<Target> targets_from_json(const Json& j);

Json to_json(const SweepConfig& c);
SweepConfig config_from_json(const Json& j);

Json curves_to_json(const std::vector<TradeoffCurve>& curves);

/// Sets a dotted key (e.g. "scenario.n_tx") to a value parsed as JSON when
/// possible and as a string otherwise.
void apply_override(Json& j, const std::string& dotted_key, const std::string& value);

}  // namespace isacma
