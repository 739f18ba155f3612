#include <iostream>
#include <string>
#include <vector>

#include "blockformer/cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return blockformer::cli::run(args, std::cout, std::cerr);
}
