#include "normloop/cli.hpp"

int main(int argc, char** argv) { return normloop::run_cli(argc, argv, std::cout, std::cerr); }
