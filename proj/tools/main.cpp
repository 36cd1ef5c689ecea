#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return irsynth::cli::dispatch(argc, argv, std::cout, std::cerr); }
