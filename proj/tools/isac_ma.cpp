// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include <iostream>

#include "isacma/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return isacma::parse_and_dispatch(args, std::cout, std::cerr);
}
