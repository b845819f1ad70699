// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

// Own main: the distro benchmark_main archive carries LTO bytecode from a
// different compiler release.
#include <benchmark/benchmark.h>

BENCHMARK_MAIN();
