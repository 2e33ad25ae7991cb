// SPDX-License-Identifier: Apache-2.0
#include "mosae/cli.hpp"

int main(int argc, char** argv) { return mosae::cli::run(argc, argv); }
