// Thin executable wrapper; all behaviour lives in run_command so the test
// suite can drive the same code paths through string streams.

#include <iostream>
#include <string>
#include <vector>

#include "vfield/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return vfield::run_command(args, std::cout, std::cerr);
}
