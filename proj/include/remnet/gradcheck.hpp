#pragma once

#include <functional>
#include <string>
#include <vector>

#include "remnet/param_store.hpp"

namespace remnet {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  bool passed(double tolerance) const { return max_rel_err < tolerance; }
};

// f(params, with_grad): returns the scalar value; when with_grad is true it
// must also accumulate d(value)/d(param) into params.grads (grads are zeroed
// here before the call). Compares reverse-mode gradients against central
// finite differences entry by entry.
GradCheckReport check_gradients(
    const std::function<double(ParamStore&, bool with_grad)>& f,
    ParamStore& params, double epsilon, double tolerance);

}  // namespace remnet
