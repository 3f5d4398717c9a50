#pragma once

#include <iosfwd>

namespace lllcsp {

/// Entry point of the `lllcsp` tool. Returns the process exit status:
/// 0 ok, 2 syntax, 3 regime, 4 resource, 5 unsat, 9 internal.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace lllcsp
