#include "graspforge/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return graspforge::run_cli(argc, argv, std::cout, std::cerr); }
