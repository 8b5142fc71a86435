#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dualcap/matrix.hpp"

namespace dualcap {

struct NamedMatrix {
  std::string name;
  Matrix value;
};

using ParamSet = std::vector<NamedMatrix>;
// Returns long double so an extended-precision oracle can keep its extra
// digits through the central difference; plain double losses convert.
using LossFn = std::function<long double(const ParamSet&)>;

struct GradCheckResult {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Compares `analytic` against central differences of `loss_fn` at `params`,
// entry by entry. `epsilon` must lie in [1e-6, 1e-4]. Throws OracleError when
// two baseline evaluations of loss_fn disagree.
std::vector<GradCheckResult> check_gradients(const LossFn& loss_fn, const ParamSet& params,
                                             const ParamSet& analytic, double epsilon = 1e-5);

}  // namespace dualcap
