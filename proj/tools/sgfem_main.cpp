#include <iostream>

#include "sgfem/cli.hpp"

int main(int argc, char** argv) { return sgfem::cli::main(argc, argv, std::cout, std::cerr); }
