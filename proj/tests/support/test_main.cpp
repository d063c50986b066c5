#include <gtest/gtest.h>

#include "invdes/alloc.hpp"

int main(int argc, char** argv) {
  invdes::tune_allocator();
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
