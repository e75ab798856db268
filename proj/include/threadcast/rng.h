#pragma once

#include <cstdint>
#include <random>

namespace threadcast {

// Seed derivation for independent streams (per tree, per graph, per step).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Sampling on top of mt19937_64, whose output sequence is fixed by the
// standard. The std:: distributions are implementation-defined, so the few
// we need are written out here to keep corpora identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);      // [lo, hi)
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t below(std::uint64_t n);      // [0, n)
  double normal();                           // N(0, 1), Box-Muller
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  int poisson(double mean);                  // Knuth; fine for small means

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace threadcast
