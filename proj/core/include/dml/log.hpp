#pragma once

#include <string>

namespace dml {

// Non-fatal diagnostics (skipped anchors, sampling with replacement, ...)
// go through here instead of raw stderr so tests can count them.

void warn(const std::string& message);

/// Number of warnings emitted since start (or since reset).
std::size_t warn_count();
void reset_warn_count();

/// Suppress warning output (counting still happens). Used by noisy tests.
void set_warn_quiet(bool quiet);

}  // namespace dml
