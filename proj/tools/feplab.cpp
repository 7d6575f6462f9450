#include <iostream>

#include "feplab/cli.hpp"

int main(int argc, char** argv) { return feplab::cli_main(argc, argv, std::cout, std::cerr); }
