#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "jeda/common.hpp"
#include "jeda/tensor.hpp"

// Test-side oracles. The finite-difference gradient here deliberately
// uses only forward evaluations, so it stays independent of backward().

namespace testutil {

inline std::vector<double> fd_grad(const std::function<double()>& eval, jeda::ad::Tensor param,
                                   double h = 1e-5) {
    auto w = param.values_mut();
    std::vector<double> g(w.size());
    for (size_t i = 0; i < w.size(); ++i) {
        double orig = w[i];
        w[i] = orig + h;
        double up = eval();
        w[i] = orig - h;
        double down = eval();
        w[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline double max_rel_err(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

inline jeda::ad::Tensor random_tensor(jeda::Rng& rng, jeda::ad::Shape shape, double lo,
                                      double hi, bool param = true) {
    int64_t n = jeda::ad::shape_size(shape);
    std::vector<double> v(static_cast<size_t>(n));
    for (double& x : v) x = lo + (hi - lo) * rng.uniform();
    return param ? jeda::ad::Tensor::parameter(std::move(shape), std::move(v))
                 : jeda::ad::Tensor::constant(std::move(shape), std::move(v));
}

}  // namespace testutil
