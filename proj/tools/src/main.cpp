#include <iostream>

#include "vwp/cli.hpp"

int main(int argc, char** argv) {
  return vwp::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
