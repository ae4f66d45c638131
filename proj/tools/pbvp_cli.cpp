#include "pbvp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return pbvp::run_cli(argc, argv, std::cout, std::cerr); }
