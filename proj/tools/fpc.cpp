#include <iostream>
#include <string>
#include <vector>

#include "fpc/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fpc::cli::run(args, std::cout, std::cerr);
}
