#include <iostream>

#include "evtrack/cli/app.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return evtrack::cli::run(args, std::cout, std::cerr);
}
