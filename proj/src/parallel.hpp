// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include "motionforge/exec.hpp"

namespace motionforge::detail {

/// Runs body(i) for i in [0, n). Iterations must be independent. Exceptions
/// cannot cross an OpenMP region, so each is captured and the one from the
/// lowest index is rethrown after the loop, the same one the serial path
/// would have raised first.
template <typename Body>
void for_each_index(std::size_t n, Exec exec, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
    return;
  }
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace motionforge::detail
