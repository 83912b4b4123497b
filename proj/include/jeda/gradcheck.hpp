#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jeda/tensor.hpp"

// Central finite-difference verification of every differentiable op and
// the composite losses, at inputs kept away from kinks, ties and branch
// boundaries. Smooth ops must agree to 1e-4, non-smooth and
// normalization paths to 1e-3.

namespace jeda::gradcheck {

struct OpCheck {
    std::string name;
    double worst_rel_err = 0;
    double threshold = 0;
    bool pass = false;
};

struct Result {
    std::vector<OpCheck> checks;
    bool all_pass = true;
    double worst_rel_err = 0;
    double seconds = 0;
};

// corrupt_fixture deliberately biases one analytic gradient so the
// harness's failure path can be exercised by tests.
Result run(bool corrupt_fixture = false);

std::string table(const Result& r);

// Worst relative error between backward() gradients of loss_fn and
// central finite differences over the listed parameters. loss_fn must
// rebuild the graph on every call.
double finite_diff_rel_err(const std::function<ad::Tensor()>& loss_fn,
                           std::vector<ad::Tensor> params, double step = 1e-5);

}  // namespace jeda::gradcheck
