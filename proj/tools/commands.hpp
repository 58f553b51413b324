#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace runperf::cli {

/// 64-bit FNV-1a over the file's bytes.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

/// Parses the command line and runs one subcommand. Returns the process exit
/// code; messages go to `out` (results, JSON log) and `err` (diagnostics).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace runperf::cli
