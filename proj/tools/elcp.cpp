#include <string>
#include <vector>

#include "elcp/cli/app.hpp"

int main(int argc, char** argv) {
    return elcp::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
