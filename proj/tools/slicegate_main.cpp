// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "slicegate/cli/commands.hpp"

int main(int argc, char** argv) { return slicegate::cli::run_cli(argc, argv, std::cout, std::cerr); }
