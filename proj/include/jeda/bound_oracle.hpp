#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jeda/common.hpp"

// Exact evaluation of the target-risk upper bound with 0-1 loss on finite
// domains whose true labeling functions are known. Everything here is
// plain integer counting and doubles; no autodiff is involved, so these
// checks are an independent oracle for the trained systems.

namespace jeda::bound {

// A deterministic labeling of feature vectors.
struct Hypothesis {
    std::string name;
    std::function<int(std::span<const double>)> fn;
    int operator()(std::span<const double> x) const { return fn(x); }
};

std::vector<int> apply_hypothesis(const Hypothesis& h, const Matrix& points);

// Fraction of points where the two labelings disagree. Exact integer
// count carried alongside the fraction.
struct Risk {
    int64_t disagreements = 0;
    int64_t n = 0;
    double value() const { return static_cast<double>(disagreements) / static_cast<double>(n); }
};

Risk risk01(const std::vector<int>& a, const std::vector<int>& b);
Risk risk01(const Hypothesis& h, const Hypothesis& ref, const Matrix& domain);

// eps_T(f_S,f_T) + eps_S(f_S,f_T) + eps_T(h,f_S) - eps_S(h,f_T)
double c_term(const Hypothesis& f_S, const Hypothesis& f_T, const Hypothesis& h,
              const Matrix& domain_S, const Matrix& domain_T);

struct HypothesisGrid {
    std::vector<Hypothesis> hypotheses;  // always contains f_S and f_T
};

// f_S and f_T first, then axis-aligned threshold stumps (both polarities)
// and linear halfspaces on an angle/offset grid covering the data range.
HypothesisGrid build_grid(const Matrix& domain_S, const Matrix& domain_T,
                          const Hypothesis& f_S, const Hypothesis& f_T,
                          int thresholds_per_axis = 10, int angles = 8,
                          int offsets_per_angle = 8);

struct BoundReport {
    std::string hypothesis;
    double eps_T_h = 0, eps_S_h = 0;
    double eps_T_fSfT = 0, eps_S_fSfT = 0;
    double eps_T_hfS = 0, eps_S_hfT = 0;
    double c_term = 0, bound_value = 0;
    double lambda = 0;
};

struct LambdaResult {
    double lambda = 0;
    int argmin_index = -1;
    std::string argmin_name;
};

// min over the grid of eps_S(h, f_S) + eps_T(h, f_T); ties keep the first.
LambdaResult lambda_enumerate(const HypothesisGrid& grid, const Matrix& domain_S,
                              const Matrix& domain_T, const Hypothesis& f_S,
                              const Hypothesis& f_T);

struct VerifyResult {
    std::vector<BoundReport> reports;  // one per grid hypothesis, grid order
    LambdaResult lambda;
    double eps_T_fSfT = 0;
    int violations = 0;
    std::vector<std::string> violation_messages;
};

// Evaluates every grid hypothesis and checks, in exact integer
// arithmetic:
//   eps_T(h) <= eps_S(h) + C  for every h,
//   bound at h = f_S equals eps_T(f_S, f_T),
//   lambda <= eps_T(f_S, f_T).
VerifyResult verify_bound_chain(const HypothesisGrid& grid, const Hypothesis& f_S,
                                const Hypothesis& f_T, const Matrix& domain_S,
                                const Matrix& domain_T);

// One report for a single hypothesis (used for trained-network probes).
BoundReport report_for(const Hypothesis& h, const Hypothesis& f_S, const Hypothesis& f_T,
                       const Matrix& domain_S, const Matrix& domain_T);

void write_reports_csv(const VerifyResult& result, const std::string& path);
std::string summary_text(const VerifyResult& result);

}  // namespace jeda::bound
