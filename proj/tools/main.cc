#include <omp.h>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "cli.h"

int main(int argc, char** argv) {
  if (const char* env = std::getenv("THREADCAST_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
  std::vector<std::string> args(argv + 1, argv + argc);
  return threadcast::cli::run(args, std::cout, std::cerr);
}
