#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return one2all::cli::dispatch(args, std::cout, std::cerr);
}
