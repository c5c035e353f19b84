#include "iotddos_cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return iotddos::cli::run_cli(argc, argv, std::cout, std::cerr); }
