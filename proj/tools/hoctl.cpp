#include <iostream>

#include "ho/cli.hpp"

int main(int argc, char** argv) { return ho::cli::run_cli(argc, argv, std::cout, std::cerr); }
