#include <iostream>

#include "tcomp/cli.hpp"

int main(int argc, char** argv) { return tcomp::cli_main(argc, argv, std::cout, std::cerr); }
