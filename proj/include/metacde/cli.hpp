#pragma once

namespace metacde {

// Full command-line entry point (train / eval / density / gen). Returns the
// process exit code: 0 success, 2 usage/config/data/IO errors, 3 numerical
// failures. Never throws.
int run_cli(int argc, const char* const* argv);

}  // namespace metacde
