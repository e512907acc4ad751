// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#include "actman/cli.hpp"

int main(int argc, char** argv) { return actman::cli::dispatch(argc, argv); }
