#include <iostream>

#include "featprobe/cli/commands.hpp"

int main(int argc, char** argv) {
  return featprobe::cli::run(argc, argv, std::cout, std::cerr);
}
