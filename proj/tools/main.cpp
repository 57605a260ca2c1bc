// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/cli.hpp"

int main(int argc, char** argv) { return motionforge::cli::run(argc, argv); }
