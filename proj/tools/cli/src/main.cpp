#include <iostream>

#include "nmf_cli/commands.hpp"

int main(int argc, char** argv) { return nmf::cli::run_cli(argc, argv, std::cout, std::cerr); }
