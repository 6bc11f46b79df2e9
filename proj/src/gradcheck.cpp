#include "remnet/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace remnet {

GradCheckReport check_gradients(
    const std::function<double(ParamStore&, bool with_grad)>& f,
    ParamStore& params, double epsilon, double tolerance) {
  if (epsilon <= 0.0) throw std::runtime_error("check_gradients: epsilon must be > 0");
  (void)tolerance;

  params.zero_grads();
  double base = f(params, true);
  if (!std::isfinite(base))
    throw std::runtime_error("check_gradients: non-finite function value");

  GradCheckReport report;
  for (auto& [name, p] : params.params) {
    const Matrix& analytic = params.grads.at(name);
    GradCheckEntry entry;
    entry.name = name;
    for (size_t i = 0; i < p.data.size(); ++i) {
      double saved = p.data[i];
      p.data[i] = saved + epsilon;
      double fp = f(params, false);
      p.data[i] = saved - epsilon;
      double fm = f(params, false);
      p.data[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("check_gradients: non-finite function value");
      double fd = (fp - fm) / (2.0 * epsilon);
      double a = analytic.data[i];
      double abs_err = std::fabs(a - fd);
      double denom = std::max(std::fabs(a), std::fabs(fd));
      double rel = denom < 1e-10 ? 0.0 : abs_err / denom;
      entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace remnet
