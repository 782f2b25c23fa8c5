// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace isacma {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitValidation = 3,
  kExitNoSuccess = 4,
};

/// args excludes the program name.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace isacma
