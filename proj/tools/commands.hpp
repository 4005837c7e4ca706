#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lcmdeconv::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitInput = 2;

// Environment variable that overrides the output directory of every command
// (the --out flag still wins).
inline constexpr const char* kOutDirEnv = "LCMDECONV_OUT_DIR";

//! One real per line, decimal or scientific; blank lines are skipped. Throws
//! ArgumentError listing offending line numbers, or "no observations".
std::vector<double> read_observations(const std::filesystem::path& path);

//! Entry point shared by the executable and the tests. Messages go to `out`
//! and `err`; the return value is the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace lcmdeconv::cli
