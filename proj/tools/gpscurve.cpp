#include <iostream>

#include "gps/cli.hpp"

int main(int argc, char** argv) { return gps::cli::main(argc, argv, std::cout, std::cerr); }
