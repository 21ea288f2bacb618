// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace chronoalign {

/// Exit codes: 0 success, 1 a check or run failed, 2 usage or config error.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace chronoalign
