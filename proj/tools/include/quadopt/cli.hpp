#pragma once

// The quadopt command line: run, ablate, select-exp, plot, resume.

#include <ostream>
#include <string>
#include <vector>

namespace quadopt::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kConfigError = 2 };

/// Runs one command line (without the program name). Messages go to `out`
/// and errors to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace quadopt::cli
