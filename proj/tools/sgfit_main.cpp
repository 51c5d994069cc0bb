// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>

int main() {
    std::puts("sgfit: CLI under construction");
    return 0;
}
