#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "remnet/matrix.hpp"
#include "remnet/rng.hpp"

namespace remnet {

// Named trainable parameters with same-shape gradient accumulators.
// std::map keeps iteration order deterministic across runs.
struct ParamStore {
  std::map<std::string, Matrix> params;
  std::map<std::string, Matrix> grads;
  uint64_t rng_seed = 0;

  // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], fan_in = rows.
  Matrix& add(const std::string& name, int rows, int cols, Rng& rng);

  // Adds an all-zero parameter (biases).
  Matrix& add_zeros(const std::string& name, int rows, int cols);

  Matrix& get(const std::string& name);
  const Matrix& get(const std::string& name) const;
  Matrix& grad(const std::string& name) { return grads.at(name); }
  bool has(const std::string& name) const { return params.count(name) > 0; }

  void zero_grads();
};

}  // namespace remnet
