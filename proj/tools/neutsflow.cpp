#include <iostream>

#include "neutsflow/cli/app.hpp"

int main(int argc, char** argv) { return neutsflow::cli::run(argc, argv, std::cout, std::cerr); }
