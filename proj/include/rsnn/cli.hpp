#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rsnn {

// Command-line front end behind the `rsnn` binary, exposed as a function so
// tests can drive it in-process. `args` excludes the program name. Every
// command writes exactly one manifest.json into its output directory; the
// `rerun` command replays any manifest bit-for-bit.
//
// Exit codes: 0 success, 2 config error (including flag parse errors),
// 3 data error, 4 numerical failure, 5 oracle-check failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rsnn
