#include <iostream>

#include "mkmh/cli.hpp"

int main(int argc, char** argv) { return mkmh::cli::run(argc, argv, std::cout, std::cerr); }
