#pragma once

#include <ostream>

namespace dbc {

/// Runs the quick property checks on small meshes, one line per check.
/// Returns the number of failed checks.
int run_selftest(std::ostream& out);

} // namespace dbc
