#include <iostream>

#include "elplug/cli.hpp"

int main(int argc, char** argv) { return elplug::cli::main(argc, argv, std::cout, std::cerr); }
