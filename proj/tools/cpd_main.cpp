// SPDX-License-Identifier: Apache-2.0
#include <string>
#include <vector>

#include "cpd/cli.hpp"

int main(int argc, char** argv) {
    return cpd::run_command(std::vector<std::string>(argv + 1, argv + argc));
}
