#include <iostream>

#include "ssepld/harness/cli.hpp"

int main(int argc, char** argv) { return ssepld::harness::run_cli(argc, argv, std::cout, std::cerr); }
