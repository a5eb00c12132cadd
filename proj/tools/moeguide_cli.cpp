#include <iostream>

#include "moeguide/cli.hpp"

int main(int argc, char** argv) { return moeguide::cli::run(argc, argv, std::cout, std::cerr); }
