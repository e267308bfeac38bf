#pragma once

namespace sphenc {

// Full command-line entry point (parsing, dispatch, error-to-exit-code
// mapping). Split from main() so tests can drive it in-process.
// Returns 0 on success, 1 on runtime failure, 2 on usage errors.
int cli_main(int argc, const char* const* argv);

}  // namespace sphenc
