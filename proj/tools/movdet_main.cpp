#include <iostream>
#include <string>
#include <vector>

#include "movdet/cli.hpp"

int main(int argc, char** argv) {
  std::cout.setf(std::ios::unitbuf);
  std::vector<std::string> args(argv + 1, argv + argc);
  return movdet::run_command(args, std::cout, std::cerr);
}
