#include "tariffsim/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return tariffsim::run_cli(argc, argv, std::cout, std::cerr); }
