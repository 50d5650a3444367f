#pragma once

#include <CLI11.hpp>

namespace taskpart::cli {

// Exit codes: 0 success, 1 runtime/I-O failure, 2 usage/validation failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Each register_* wires a subcommand whose callback throws taskpart errors;
// main maps them to exit codes.
void register_extract(CLI::App& app);
void register_partition(CLI::App& app);
void register_pipeline(CLI::App& app);
void register_report(CLI::App& app);

}  // namespace taskpart::cli
