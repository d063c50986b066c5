#include <iostream>

#include "cli.hpp"
#include "invdes/alloc.hpp"

int main(int argc, char** argv) {
  invdes::tune_allocator();
  return invdes::cli::run(argc, argv, std::cout, std::cerr);
}
