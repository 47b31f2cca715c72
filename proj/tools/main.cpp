#include <iostream>

#include "perturbkit/cli.hpp"

int main(int argc, char** argv) { return perturbkit::run_cli(argc, argv, std::cout, std::cerr); }
