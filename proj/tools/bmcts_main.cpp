#include <iostream>

#include "bmcts/cli.hpp"

int main(int argc, char** argv) { return bmcts::run_cli(argc, argv, std::cout, std::cerr); }
