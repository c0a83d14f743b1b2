#pragma once

// Command-line surface: train, eval, predict, dump-attention,
// inspect-checkpoint. Exit codes: 0 success, 1 usage error, 2 data error.

namespace cian {

int run_cli(int argc, const char* const* argv);

}  // namespace cian
