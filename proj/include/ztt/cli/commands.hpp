// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ztt::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,     // anything not listed below
    kBadInput = 2,    // command line, config, corpus, budget or conversion errors
    kNumeric = 3,     // non-finite loss during training
    kCheckpoint = 4,  // unreadable checkpoint, wrong magic or version
};

// Runs `ztt <subcommand> ...`; args excludes the program name. Diagnostics go
// to `err`, results to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ztt::cli
