#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "nsh/parallel.hpp"

int main(int argc, char** argv) {
  nsh::retain_heap_buffers();
  doctest::Context context(argc, argv);
  return context.run();
}
