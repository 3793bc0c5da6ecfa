#include <iostream>
#include <string>
#include <vector>

#include "scmb/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return scmb::runCommand(args, std::cout, std::cerr);
}
