#pragma once

#include <ostream>

namespace sheafnn {

/// Runs the built-in invariant suite (sheaf algebra, layer degeneration,
/// gradients, optimizer, metrics, grids and fold protocol), printing one
/// line per check. Returns true iff every check passes.
bool run_selfcheck(std::ostream& out);

}  // namespace sheafnn
