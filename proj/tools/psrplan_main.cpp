#include <iostream>
#include <string>
#include <vector>

#include "psrplan/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return psrplan::run_cli(args, std::cout, std::cerr);
}
