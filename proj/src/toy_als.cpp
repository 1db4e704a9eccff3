#include <cmath>
#include <limits>
#include <stdexcept>

#include "hrsi/models.hpp"

namespace hrsi {

std::vector<ToyAlsStep> toy_als(double y, double lambda, std::size_t iterations, double x1_start,
                                double x2_start) {
  if (!(lambda > 0.0) || !(y > 0.0)) throw std::invalid_argument("toy_als: y and lambda must be positive");
  if (lambda >= y) throw std::invalid_argument("toy_als: lambda must be smaller than y");
  const double target = std::sqrt(y - lambda);
  auto cost = [&](double a, double b) {
    const double r = y - a * b;
    return r * r + lambda * (a * a + b * b);
  };

  std::vector<ToyAlsStep> trace;
  trace.reserve(iterations + 1);
  double x1 = x1_start, x2 = x2_start;
  for (std::size_t k = 0; k <= iterations; ++k) {
    ToyAlsStep s;
    s.iteration = k;
    s.x1 = x1;
    s.x2 = x2;
    s.cost = cost(x1, x2);
    s.error = x1 - target;
    s.predicted_decrease = 16.0 * lambda * lambda / y * s.error * s.error;

    const double x1_next = x2 * y / (x2 * x2 + lambda);
    // f(x1, x2) - f(x1', x2) simplifies to (x2^2 + lambda)(x1 - x1')^2 when
    // x1' is the exact minimiser; this form avoids cancellation.
    s.decrease = (x2 * x2 + lambda) * (x1 - x1_next) * (x1 - x1_next);
    trace.push_back(s);

    x1 = x1_next;
    x2 = x1 * y / (x1 * x1 + lambda);
  }
  for (std::size_t k = 0; k + 1 < trace.size(); ++k)
    trace[k].ratio = trace[k].error != 0.0 ? trace[k + 1].error / trace[k].error
                                           : std::numeric_limits<double>::quiet_NaN();
  trace.back().ratio = std::numeric_limits<double>::quiet_NaN();
  return trace;
}

}  // namespace hrsi
