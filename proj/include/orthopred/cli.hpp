#pragma once

// Command-line front end: sqrt-bench, predictor-eval, pca-demo, train and
// quasi-ortho. Exit codes: 0 pass, 1 numeric or tolerance failure, 2 usage.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace orthopred {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int { kExitPass = 0, kExitFailure = 1, kExitUsage = 2 };

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace orthopred
