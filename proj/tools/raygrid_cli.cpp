// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

// Placeholder entry point; subcommands are added as modules land.

#include <cstdio>

int main() {
    std::puts("raygrid");
    return 0;
}
