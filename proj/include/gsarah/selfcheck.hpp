#pragma once

#include <iosfwd>

namespace gsarah {

// Deterministic built-in diagnostics behind the `check` subcommand: sampler
// distributions, the geometrization identity, gradient finite differences,
// and the one-epoch inequality.  Prints one line per check; returns 0 iff
// all pass.
int run_self_checks(std::ostream& out);

}  // namespace gsarah
