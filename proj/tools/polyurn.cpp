// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#include "polyurn/cli.hpp"

int main(int argc, char** argv) { return polyurn::cli::main(argc, argv); }
