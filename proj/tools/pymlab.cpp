/// @file pymlab.cpp
/// Thin executable wrapper: all logic lives in the header library so tests
/// can drive the exact production path in-process.
#include "pym/cli.hpp"

int main(int argc, char** argv) {
  return pym::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
