#include <iostream>

#include "cote/cli.hpp"

int main(int argc, char** argv) { return cote::cli::run(argc, argv, std::cout, std::cerr); }
