#pragma once

namespace plm {

// Command-line front end (run / eval / train / export). Exposed as a
// function so tests can drive it in-process. Exit codes: 0 success,
// 2 configuration error, 3 payload dropped, 4 robot failure,
// 5 file IO/parse error, 1 unexpected error.
int cli_main(int argc, const char* const* argv);

}  // namespace plm
