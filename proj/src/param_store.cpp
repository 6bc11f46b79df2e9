#include "remnet/param_store.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace remnet {

Matrix& ParamStore::add(const std::string& name, int rows, int cols, Rng& rng) {
  if (params.count(name))
    throw std::runtime_error("ParamStore: duplicate parameter '" + name + "'");
  Matrix m(rows, cols);
  double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  grads[name] = Matrix(rows, cols);
  return params[name] = std::move(m);
}

Matrix& ParamStore::add_zeros(const std::string& name, int rows, int cols) {
  if (params.count(name))
    throw std::runtime_error("ParamStore: duplicate parameter '" + name + "'");
  grads[name] = Matrix(rows, cols);
  return params[name] = Matrix(rows, cols);
}

Matrix& ParamStore::get(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end())
    throw std::runtime_error("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

const Matrix& ParamStore::get(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end())
    throw std::runtime_error("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, g] : grads)
    std::fill(g.data.begin(), g.data.end(), 0.0);
}

}  // namespace remnet
