// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "eccl_cli.hpp"

int main(int argc, char** argv) { return eccl::cli::run_cli(argc, argv, std::cout, std::cerr); }
