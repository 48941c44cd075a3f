#pragma once

#include <iosfwd>

namespace vtrace::cli {

inline constexpr int kSchemaVersion = 1;

/// Exit codes: 0 success (or all conditions satisfied), 1 configuration or
/// input error, 2 a condition is violated, 3 a condition is indeterminate,
/// 4 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace vtrace::cli
