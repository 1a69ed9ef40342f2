#include "cvbias/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return cvbias::cli::run(argc, argv, std::cout, std::cerr); }
