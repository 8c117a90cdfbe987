// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#include "vendi/cli.hpp"

int main(int argc, char** argv) { return vendi::cli::run(argc, argv); }
