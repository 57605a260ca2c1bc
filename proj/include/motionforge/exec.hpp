// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace motionforge {

/// Serial is the reference path; Parallel distributes independent frames or
/// rows over OpenMP threads and produces bit-identical results.
enum class Exec { Serial, Parallel };

}  // namespace motionforge
