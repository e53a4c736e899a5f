#include <iostream>

#include "arena/cli.hpp"

int main(int argc, char** argv) {
  return arena::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
