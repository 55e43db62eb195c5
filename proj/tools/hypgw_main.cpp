#include <iostream>

#include "hypgw/cli.hpp"

int main(int argc, char** argv) { return hypgw::cli::run(argc, argv, std::cout, std::cerr); }
