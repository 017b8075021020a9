#include <iostream>

#include "cfl/cli.hpp"

int main(int argc, char** argv) { return cfl::cli::run(argc, argv, std::cout, std::cerr); }
