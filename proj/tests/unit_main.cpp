#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>

#include "spinctl/kernels.hpp"

// SPINCTL_BACKEND=scalar|avx2 pins the kernel backend for the whole run,
// so the suite can be checked under every implementation.
int main(int argc, char** argv) {
  if (const char* backend = std::getenv("SPINCTL_BACKEND"))
    spinctl::kern::set_backend(spinctl::kern::parse_backend(backend));
  return doctest::Context(argc, argv).run();
}
