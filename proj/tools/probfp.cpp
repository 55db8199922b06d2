#include "probfp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return probfp::run_cli(argc, argv, std::cout, std::cerr); }
