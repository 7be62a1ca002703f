#pragma once

namespace semel {

/// Dispatches one CLI invocation. Exit codes: 0 success, 1 usage error,
/// 2 numerical or input-data failure (an `error=<kind>` line is printed).
int run_cli(int argc, const char* const* argv);

}  // namespace semel
