#include <iostream>

#include "lsor/cli.hpp"

int main(int argc, char** argv) {
  return lsor::cli_main(argc, argv, std::cout, std::cerr);
}
