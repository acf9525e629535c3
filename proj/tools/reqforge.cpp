#include <iostream>
#include <string>
#include <vector>

#include "reqforge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return reqforge::cli::run(args, reqforge::cli::current_environment(), std::cout, std::cerr);
}
