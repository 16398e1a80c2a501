#pragma once

// Counter-based pseudo-random generator (SplitMix64 output function applied
// to seed + counter * golden ratio). Chosen over std engines so that results
// are bit-identical across platforms and independent streams can be derived
// for parallel restarts without coordination.

#include <cstdint>

#include "bellbound/linalg.hpp"

namespace bellbound {

class Rng {
 public:
  explicit Rng(uint64_t seed = 0x5eed5eed5eedULL) : seed_(seed), counter_(0) {}

  // Independent stream: hashes (seed, stream index) into a new seed.
  Rng stream(uint64_t index) const;

  uint64_t next_u64();
  double uniform();                 // [0, 1)
  double gaussian();                // Box-Muller, one value per call pair
  int uniform_int(int n);           // {0, ..., n-1}

  // Matrix with iid standard complex Gaussian entries.
  Mat ginibre(int rows, int cols);
  // Haar-random unitary via QR of a Ginibre matrix.
  Mat haar_unitary(int d);
  // Random density matrix rho = G G^dag / tr(G G^dag), G rectangular d x rank.
  Mat ginibre_state(int d, int rank);
  // Haar-random pure state projector.
  Mat haar_pure_state(int d);

 private:
  uint64_t seed_;
  uint64_t counter_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bellbound
