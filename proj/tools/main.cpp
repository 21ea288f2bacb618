// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/cli.hpp"

int main(int argc, char** argv) { return chronoalign::run_cli(argc, argv); }
