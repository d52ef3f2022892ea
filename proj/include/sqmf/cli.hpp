#pragma once

namespace sqmf {

/// Entry point of the `sqmf` tool. Returns 0 on success, 2 on usage or
/// validation errors and 3 on numerical failure; errors are reported as one
/// line on stderr.
int run_cli(int argc, char** argv);

}  // namespace sqmf
