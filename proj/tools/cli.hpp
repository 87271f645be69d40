#pragma once

#include <ostream>

namespace imbametric {

/// Runs one command line. Returns the process exit status: 0 on success,
/// 1 for usage errors, 2 for data and I/O errors, 3 for numeric failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace imbametric
