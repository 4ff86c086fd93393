#pragma once

#include <functional>
#include <vector>

#include "lal/tensor.hpp"

namespace lal {

struct GradCheckReport {
    double max_rel_error = 0.0; // over cleanly-checked elements
    long checked = 0;
    long skipped = 0; // disagreements explained by a relu kink crossing
};

// Compares analytic gradients against central finite differences (step h) for
// every element of every tensor in `params`. `build_loss` must construct the
// same scalar-loss graph each time it is called, reading the current contents
// of the parameter tensors. Relative error is |a-n| / max(|a|,|n|,1e-8).
//
// Elements whose disagreement coincides with a relu unit changing sign
// between the +h and -h evaluations are reported as skipped, not failed:
// the subgradient there is ambiguous by convention.
GradCheckReport grad_check(const std::function<TensorPtr(Graph&)>& build_loss,
                           const std::vector<TensorPtr>& params, double tolerance,
                           double h = 1e-5);

} // namespace lal
