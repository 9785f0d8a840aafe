#include "ucd/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return ucd::cli::run(argc, argv, std::cout, std::cerr); }
