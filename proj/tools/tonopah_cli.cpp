#include <iostream>
#include <string>
#include <vector>

#include "tonopah/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tonopah::cli::run_cli(args, std::cout, std::cerr);
}
