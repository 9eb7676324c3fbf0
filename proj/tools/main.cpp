#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return rislink::cli::run(argc, argv, std::cout, std::cerr); }
