#pragma once

namespace vgcl {

/// Entry point behind the `vgcl` binary; returns the process exit code.
/// Subcommands: split, train, augment, eval, verify-bound.
int run_cli(int argc, const char* const* argv);

}  // namespace vgcl
