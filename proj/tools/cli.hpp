#pragma once

#include <iosfwd>

namespace reinflect::cli {

// Runs one command line; returns the process exit status. Diagnostics go to
// `err` as "error: <kind>: <message>".
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace reinflect::cli
