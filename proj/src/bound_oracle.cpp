#include "jeda/bound_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace jeda::bound {

std::vector<int> apply_hypothesis(const Hypothesis& h, const Matrix& points) {
    std::vector<int> out(points.rows);
    for (int i = 0; i < points.rows; ++i) out[i] = h(points.row(i));
    return out;
}

Risk risk01(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ContractError("risk01: label vectors differ in length");
    if (a.empty()) throw ContractError("risk01: empty domain");
    Risk r;
    r.n = static_cast<int64_t>(a.size());
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) r.disagreements++;
    return r;
}

Risk risk01(const Hypothesis& h, const Hypothesis& ref, const Matrix& domain) {
    if (domain.rows == 0) throw ContractError("risk01: empty domain");
    return risk01(apply_hypothesis(h, domain), apply_hypothesis(ref, domain));
}

double c_term(const Hypothesis& f_S, const Hypothesis& f_T, const Hypothesis& h,
              const Matrix& domain_S, const Matrix& domain_T) {
    double eps_T_fSfT = risk01(f_S, f_T, domain_T).value();
    double eps_S_fSfT = risk01(f_S, f_T, domain_S).value();
    double eps_T_hfS = risk01(h, f_S, domain_T).value();
    double eps_S_hfT = risk01(h, f_T, domain_S).value();
    return eps_T_fSfT + eps_S_fSfT + eps_T_hfS - eps_S_hfT;
}

HypothesisGrid build_grid(const Matrix& domain_S, const Matrix& domain_T,
                          const Hypothesis& f_S, const Hypothesis& f_T,
                          int thresholds_per_axis, int angles, int offsets_per_angle) {
    if (domain_S.cols != domain_T.cols)
        throw ContractError("build_grid: domains have different widths");
    int d = domain_S.cols;
    HypothesisGrid grid;
    grid.hypotheses.push_back(f_S);
    grid.hypotheses.push_back(f_T);

    std::vector<double> lo(d, 0.0), hi(d, 0.0);
    for (int j = 0; j < d; ++j) {
        double mn = domain_S.at(0, j), mx = mn;
        auto scan = [&](const Matrix& m) {
            for (int i = 0; i < m.rows; ++i) {
                mn = std::min(mn, m.at(i, j));
                mx = std::max(mx, m.at(i, j));
            }
        };
        scan(domain_S);
        scan(domain_T);
        lo[j] = mn;
        hi[j] = mx;
    }

    for (int axis = 0; axis < d; ++axis) {
        for (int k = 0; k < thresholds_per_axis; ++k) {
            double t = lo[axis] + (hi[axis] - lo[axis]) * (k + 0.5) / thresholds_per_axis;
            for (int pol = 0; pol < 2; ++pol) {
                std::ostringstream name;
                name << "stump(a" << axis << (pol ? "<" : ">") << t << ")";
                grid.hypotheses.push_back(Hypothesis{
                    name.str(), [axis, t, pol](std::span<const double> x) {
                        bool above = x[axis] > t;
                        return (above != (pol != 0)) ? 1 : 0;
                    }});
            }
        }
    }

    // Halfspaces only make sense beyond one dimension; the 2-D angle grid
    // covers the synthetic scenarios. Higher dims fall back to the first
    // two coordinates.
    if (d >= 2) {
        double cx = 0.5 * (lo[0] + hi[0]), cy = 0.5 * (lo[1] + hi[1]);
        double radius = 0.5 * std::hypot(hi[0] - lo[0], hi[1] - lo[1]);
        if (radius <= 0) radius = 1.0;
        for (int a = 0; a < angles; ++a) {
            double theta = 3.14159265358979323846 * a / angles;
            double wx = std::cos(theta), wy = std::sin(theta);
            for (int k = 0; k < offsets_per_angle; ++k) {
                double b = wx * cx + wy * cy + radius * (2.0 * (k + 0.5) / offsets_per_angle - 1.0);
                for (int pol = 0; pol < 2; ++pol) {
                    std::ostringstream name;
                    name << "halfspace(t" << theta << ",b" << b << "," << pol << ")";
                    grid.hypotheses.push_back(Hypothesis{
                        name.str(), [wx, wy, b, pol](std::span<const double> x) {
                            bool above = wx * x[0] + wy * x[1] > b;
                            return (above != (pol != 0)) ? 1 : 0;
                        }});
                }
            }
        }
    }
    return grid;
}

LambdaResult lambda_enumerate(const HypothesisGrid& grid, const Matrix& domain_S,
                              const Matrix& domain_T, const Hypothesis& f_S,
                              const Hypothesis& f_T) {
    if (grid.hypotheses.empty()) throw ContractError("lambda_enumerate: empty grid");
    auto fS_on_S = apply_hypothesis(f_S, domain_S);
    auto fT_on_T = apply_hypothesis(f_T, domain_T);
    LambdaResult best;
    for (size_t i = 0; i < grid.hypotheses.size(); ++i) {
        const auto& h = grid.hypotheses[i];
        double joint = risk01(apply_hypothesis(h, domain_S), fS_on_S).value() +
                       risk01(apply_hypothesis(h, domain_T), fT_on_T).value();
        if (best.argmin_index < 0 || joint < best.lambda) {
            best.lambda = joint;
            best.argmin_index = static_cast<int>(i);
            best.argmin_name = h.name;
        }
    }
    return best;
}

BoundReport report_for(const Hypothesis& h, const Hypothesis& f_S, const Hypothesis& f_T,
                       const Matrix& domain_S, const Matrix& domain_T) {
    BoundReport r;
    r.hypothesis = h.name;
    auto h_S = apply_hypothesis(h, domain_S);
    auto h_T = apply_hypothesis(h, domain_T);
    auto fS_S = apply_hypothesis(f_S, domain_S);
    auto fS_T = apply_hypothesis(f_S, domain_T);
    auto fT_S = apply_hypothesis(f_T, domain_S);
    auto fT_T = apply_hypothesis(f_T, domain_T);
    r.eps_T_h = risk01(h_T, fT_T).value();
    r.eps_S_h = risk01(h_S, fS_S).value();
    r.eps_T_fSfT = risk01(fS_T, fT_T).value();
    r.eps_S_fSfT = risk01(fS_S, fT_S).value();
    r.eps_T_hfS = risk01(h_T, fS_T).value();
    r.eps_S_hfT = risk01(h_S, fT_S).value();
    r.c_term = r.eps_T_fSfT + r.eps_S_fSfT + r.eps_T_hfS - r.eps_S_hfT;
    r.bound_value = r.eps_S_h + r.c_term;
    return r;
}

VerifyResult verify_bound_chain(const HypothesisGrid& grid, const Hypothesis& f_S,
                                const Hypothesis& f_T, const Matrix& domain_S,
                                const Matrix& domain_T) {
    VerifyResult res;
    auto fS_S = apply_hypothesis(f_S, domain_S);
    auto fS_T = apply_hypothesis(f_S, domain_T);
    auto fT_S = apply_hypothesis(f_T, domain_S);
    auto fT_T = apply_hypothesis(f_T, domain_T);
    int64_t nS = domain_S.rows, nT = domain_T.rows;
    if (nS == 0 || nT == 0) throw ContractError("verify_bound_chain: empty domain");
    int64_t cT_fSfT = risk01(fS_T, fT_T).disagreements;
    int64_t cS_fSfT = risk01(fS_S, fT_S).disagreements;
    res.eps_T_fSfT = static_cast<double>(cT_fSfT) / nT;

    res.lambda = lambda_enumerate(grid, domain_S, domain_T, f_S, f_T);

    bool saw_fS_tight = false;
    for (const auto& h : grid.hypotheses) {
        auto h_S = apply_hypothesis(h, domain_S);
        auto h_T = apply_hypothesis(h, domain_T);
        int64_t cT_hfT = risk01(h_T, fT_T).disagreements;
        int64_t cS_hfS = risk01(h_S, fS_S).disagreements;
        int64_t cT_hfS = risk01(h_T, fS_T).disagreements;
        int64_t cS_hfT = risk01(h_S, fT_S).disagreements;

        BoundReport r;
        r.hypothesis = h.name;
        r.eps_T_h = static_cast<double>(cT_hfT) / nT;
        r.eps_S_h = static_cast<double>(cS_hfS) / nS;
        r.eps_T_fSfT = static_cast<double>(cT_fSfT) / nT;
        r.eps_S_fSfT = static_cast<double>(cS_fSfT) / nS;
        r.eps_T_hfS = static_cast<double>(cT_hfS) / nT;
        r.eps_S_hfT = static_cast<double>(cS_hfT) / nS;
        r.c_term = r.eps_T_fSfT + r.eps_S_fSfT + r.eps_T_hfS - r.eps_S_hfT;
        r.bound_value = r.eps_S_h + r.c_term;
        r.lambda = res.lambda.lambda;
        res.reports.push_back(r);

        // eps_T(h) <= eps_S(h) + C, cleared of denominators so the check
        // is exact: nS*(cT_fSfT + cT_hfS - cT_hfT) + nT*(cS_hfS + cS_fSfT - cS_hfT) >= 0
        int64_t lhs = nS * (cT_fSfT + cT_hfS - cT_hfT) + nT * (cS_hfS + cS_fSfT - cS_hfT);
        if (lhs < 0) {
            res.violations++;
            std::ostringstream msg;
            msg << "bound violated for " << h.name << ": eps_T(h)=" << r.eps_T_h
                << " > eps_S(h)+C=" << r.bound_value;
            res.violation_messages.push_back(msg.str());
        }

        // Tightness at h = f_S: exact when h's labels coincide with f_S.
        if (h_S == fS_S && h_T == fS_T && !saw_fS_tight) {
            saw_fS_tight = true;
            if (cS_hfS != 0 || cT_hfS != 0 || cS_hfT != cS_fSfT) {
                res.violations++;
                res.violation_messages.push_back("tightness decomposition failed at h = f_S");
            }
            if (std::fabs(r.bound_value - r.eps_T_fSfT) > 2e-15) {
                res.violations++;
                std::ostringstream msg;
                msg << "bound at h=f_S is " << r.bound_value << ", expected eps_T(f_S,f_T)="
                    << r.eps_T_fSfT;
                res.violation_messages.push_back(msg.str());
            }
        }
    }
    if (!saw_fS_tight) {
        res.violations++;
        res.violation_messages.push_back("grid does not contain f_S");
    }
    if (res.lambda.lambda > res.eps_T_fSfT + 1e-15) {
        res.violations++;
        std::ostringstream msg;
        msg << "lambda " << res.lambda.lambda << " exceeds eps_T(f_S,f_T) " << res.eps_T_fSfT;
        res.violation_messages.push_back(msg.str());
    }
    return res;
}

void write_reports_csv(const VerifyResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "# schema: jeda.bound.v1\n";
    out << "hypothesis,eps_T_h,eps_S_h,eps_T_fSfT,eps_S_fSfT,eps_T_hfS,eps_S_hfT,"
           "c_term,bound_value,lambda\n";
    for (const auto& r : result.reports) {
        out << '"' << r.hypothesis << '"' << ',' << format_double(r.eps_T_h) << ','
            << format_double(r.eps_S_h) << ',' << format_double(r.eps_T_fSfT) << ','
            << format_double(r.eps_S_fSfT) << ',' << format_double(r.eps_T_hfS) << ','
            << format_double(r.eps_S_hfT) << ',' << format_double(r.c_term) << ','
            << format_double(r.bound_value) << ',' << format_double(r.lambda) << "\n";
    }
}

std::string summary_text(const VerifyResult& result) {
    std::ostringstream out;
    out << "hypotheses checked: " << result.reports.size() << "\n";
    out << "violations: " << result.violations << "\n";
    out << "lambda: " << format_double(result.lambda.lambda) << " (argmin "
        << result.lambda.argmin_name << ")\n";
    out << "eps_T(f_S,f_T): " << format_double(result.eps_T_fSfT) << "\n";
    for (const auto& msg : result.violation_messages) out << "VIOLATION: " << msg << "\n";
    return out.str();
}

}  // namespace jeda::bound
