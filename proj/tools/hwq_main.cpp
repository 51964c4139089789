#include <vector>
#include <string>

#include "hwq/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return hwq::run_cli(args);
}
