#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace onebit::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit statuses: 0 success (including diagnostic reports), 1 validation
/// error, 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace onebit::cli
