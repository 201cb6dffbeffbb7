#include <iostream>

#include "tvanish/cli.hpp"

int main(int argc, char** argv) { return tvanish::run_cli(argc, argv, std::cout, std::cerr); }
