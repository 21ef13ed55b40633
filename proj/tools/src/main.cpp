#include <iostream>

#include "quadopt/cli.hpp"

int main(int argc, char** argv) {
  return quadopt::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
