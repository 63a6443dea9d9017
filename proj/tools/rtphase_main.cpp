#include <iostream>

#include "rtphase/cli.hpp"

int main(int argc, char** argv) {
  auto args = std::vector<std::string>(argv + 1, argv + argc);
  return rtphase::run_cli(args, std::cout, std::cerr);
}
