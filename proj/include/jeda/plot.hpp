#pragma once

#include <string>
#include <vector>

#include "jeda/common.hpp"

// SVG emitters for the three report plots. SVG is the only plot format:
// no plotting dependency, and the files diff cleanly in tests.

namespace jeda::plot {

struct CurvePoint {
    double gap = 0;
    double primitive = 0;
    double dual = 0;
    double l1 = 0;
};

// Binary two-hypothesis setup parameterized by a scalar logit gap:
// f1 has logits (+gap/2, -gap/2), f2 the mirror image. Used by the curves
// plot and checked against cmd_pointwise in tests.
std::vector<CurvePoint> discrepancy_curves(const std::vector<double>& gaps, double clamp = 1e-7);

// Primitive/dual/L1 discrepancy values against the logit gap.
void plot_curves(const std::string& out_svg);

// Scatter of both domains over the trained h's rasterized decision
// regions. run_dir must hold config.echo and seed_<s>/checkpoint.txt.
void plot_boundary(const std::string& run_dir, int seed_index, const std::string& out_svg);

// eps_T(f1,f2) + eps_S(f1,f2) per step, read from a metrics.csv.
void plot_marginal_discrepancy(const std::string& metrics_csv, const std::string& out_svg);

}  // namespace jeda::plot
