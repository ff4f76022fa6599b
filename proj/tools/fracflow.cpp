#include <iostream>

#include "fracflow/cli.hpp"

int main(int argc, char** argv) { return fracflow::cli::run(argc, argv, std::cout, std::cerr); }
