#include <iostream>

#include "maass/cli.hpp"

int main(int argc, char** argv) { return maass::cli::run(argc, argv, std::cout, std::cerr); }
