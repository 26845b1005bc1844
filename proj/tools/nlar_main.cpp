#include <iostream>

#include "nlar/commands.hpp"

int main(int argc, char** argv) { return nlar::cli_main(argc, argv, std::cout, std::cerr); }
