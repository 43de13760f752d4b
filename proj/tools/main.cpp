#include <iostream>

#include "gmmdr/cli.hpp"

int main(int argc, char** argv) { return gmmdr::run_cli(argc, argv, std::cout, std::cerr); }
