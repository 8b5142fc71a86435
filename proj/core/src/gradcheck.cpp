#include "dualcap/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dualcap/error.hpp"

namespace dualcap {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

std::vector<GradCheckResult> check_gradients(const LossFn& loss_fn, const ParamSet& params,
                                             const ParamSet& analytic, double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-4)) {
    throw ArgumentError("check_gradients: epsilon " + std::to_string(epsilon) +
                        " outside [1e-6, 1e-4]");
  }
  if (params.size() != analytic.size()) {
    throw DimensionError("check_gradients: " + std::to_string(params.size()) +
                         " parameters but " + std::to_string(analytic.size()) + " gradients");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].value.same_shape(analytic[k].value)) {
      throw DimensionError("check_gradients: gradient for '" + params[k].name + "' has shape " +
                           analytic[k].value.shape_string() + ", parameter has " +
                           params[k].value.shape_string());
    }
  }

  const long double baseline = loss_fn(params);
  const long double repeat = loss_fn(params);
  if (baseline != repeat) {
    throw OracleError("check_gradients: loss function is not deterministic (" +
                      std::to_string(static_cast<double>(baseline)) + " vs " +
                      std::to_string(static_cast<double>(repeat)) + ")");
  }

  ParamSet probe = params;
  std::vector<GradCheckResult> results;
  results.reserve(params.size());
  for (std::size_t k = 0; k < probe.size(); ++k) {
    GradCheckResult result{probe[k].name};
    auto values = probe[k].value.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      const double up = original + epsilon;
      const double down = original - epsilon;
      values[i] = up;
      const long double plus = loss_fn(probe);
      values[i] = down;
      const long double minus = loss_fn(probe);
      values[i] = original;

      // Divide by the step actually taken after rounding theta +- epsilon to double.
      const auto numeric = static_cast<double>((plus - minus) / (static_cast<long double>(up) -
                                                                 static_cast<long double>(down)));
      const double a = analytic[k].value[i];
      const double err = relative_error(a, numeric);
      if (err > result.max_relative_error || i == 0) {
        result.max_relative_error = std::max(err, result.max_relative_error);
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace dualcap
