#include <iostream>

#include "lllcsp/cli.hpp"

int main(int argc, char** argv)
{
    return lllcsp::run_cli(argc, argv, std::cout, std::cerr);
}
