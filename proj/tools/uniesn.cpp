#include <iostream>

#include "uniesn/cli.hpp"

int main(int argc, char** argv)
{
    return uniesn::cli::run(argc, argv, std::cout, std::cerr);
}
