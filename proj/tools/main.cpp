#include "nlrabi/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return nlrabi::cli::run(argc, argv, std::cout, std::cerr); }
