#include <iostream>

#include "workbench.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return onebit::cli::run(args, std::cout, std::cerr);
}
