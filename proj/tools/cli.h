#pragma once

/// @file
/// The cone-cert command-line front end: problem-file parsing and schema
/// validation, dispatch to the library, and deterministic result files.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace conecert::cli {

inline constexpr const char* kToolName = "cone-cert";
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitHolds = 0,      // feasible / holds
  kExitFails = 1,      // infeasible / fails
  kExitUndecided = 2,
  kExitInputError = 3,
};

/// Schema violations of a parsed problem file, one message per violation,
/// each naming the offending field. Empty when the file is well formed.
/// `command` is checked against the file's own "command" field when set.
std::vector<std::string> validate_problem(const nlohmann::json& doc,
                                          const std::string& command = "");

/// JSON text with two-space indentation, arrays of scalars on one line and
/// every floating-point number printed with 17 significant digits.
std::string format_json(const nlohmann::ordered_json& value);

/// 64-bit FNV-1a of the bytes, as "fnv1a64:<16 hex digits>".
std::string input_digest(const std::string& bytes);

/// Runs `cone-cert <command> --input <path> [--output <path>] [--seed N]
/// [--tol X] [--grid N] [--horizon T]`. `args` excludes the program name.
/// Results go to --output or `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace conecert::cli
