#include <iostream>

#include "curio/cli.hpp"

int main(int argc, char** argv) {
  return curio::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
