#pragma once

namespace hvo {

/// Exit codes: 0 success, 1 configuration or usage error, 2 infeasible
/// mission or no feasible ratio, 3 at least one failed sweep row.
int run_cli(int argc, char** argv);

}  // namespace hvo
