#include <iostream>

#include "miwt/cli.hpp"

int main(int argc, char** argv) { return miwt::run_cli(argc, argv, std::cout, std::cerr); }
