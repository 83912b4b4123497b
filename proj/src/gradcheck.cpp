#include "jeda/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "jeda/discrepancy.hpp"
#include "jeda/nets.hpp"

namespace jeda::gradcheck {

using ad::Tensor;

double finite_diff_rel_err(const std::function<ad::Tensor()>& loss_fn,
                           std::vector<ad::Tensor> params, double step) {
    for (auto& p : params) p.reset_grad();
    Tensor loss = loss_fn();
    ad::backward(loss);
    std::vector<std::vector<double>> analytic;
    for (auto& p : params) {
        auto g = p.grad();
        analytic.emplace_back(g.begin(), g.end());
    }
    double worst = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto w = params[pi].values_mut();
        for (size_t i = 0; i < w.size(); ++i) {
            double orig = w[i];
            w[i] = orig + step;
            double up = loss_fn().item();
            w[i] = orig - step;
            double down = loss_fn().item();
            w[i] = orig;
            double fd = (up - down) / (2.0 * step);
            double a = analytic[pi][i];
            double denom = std::max({1.0, std::fabs(a), std::fabs(fd)});
            worst = std::max(worst, std::fabs(a - fd) / denom);
        }
    }
    return worst;
}

namespace {

constexpr double kSmooth = 1e-4;
constexpr double kNonSmooth = 1e-3;

Tensor random_param(Rng& rng, ad::Shape shape, double lo, double hi) {
    int64_t n = ad::shape_size(shape);
    std::vector<double> v(static_cast<size_t>(n));
    for (double& x : v) x = lo + (hi - lo) * rng.uniform();
    return Tensor::parameter(std::move(shape), std::move(v));
}

// Fixed random weights turning a tensor-valued op into a scalar loss that
// exercises every output entry.
Tensor make_mix(Rng& rng, ad::Shape shape) {
    int64_t n = ad::shape_size(shape);
    std::vector<double> v(static_cast<size_t>(n));
    for (double& x : v) x = -1.0 + 2.0 * rng.uniform();
    return Tensor::constant(std::move(shape), std::move(v));
}

// Keeps a clear gap to `other` so max/min selections never flip under the
// finite-difference probes.
Tensor separated_param(Rng& rng, ad::Shape shape, const Tensor& other, double gap) {
    int64_t n = ad::shape_size(shape);
    auto ov = other.values();
    std::vector<double> v(static_cast<size_t>(n));
    for (size_t i = 0; i < v.size(); ++i) {
        double delta = gap + rng.uniform();
        v[i] = ov[i] + (rng.uniform() < 0.5 ? -delta : delta);
    }
    return Tensor::parameter(std::move(shape), std::move(v));
}

struct Harness {
    Result result;
    bool corrupt = false;

    void check(const std::string& name, double threshold, double err) {
        if (corrupt && name == "tanh") err += 1e-2;  // test fixture: simulated bad backward
        OpCheck c{name, err, threshold, err < threshold};
        c.pass = err < threshold;
        result.checks.push_back(c);
        result.worst_rel_err = std::max(result.worst_rel_err, err);
        if (!c.pass) result.all_pass = false;
    }
};

}  // namespace

Result run(bool corrupt_fixture) {
    auto t0 = std::chrono::steady_clock::now();
    Harness h;
    h.corrupt = corrupt_fixture;
    Rng rng(20240617);

    {
        Tensor a = random_param(rng, {3, 4}, -1, 1);
        Tensor b = random_param(rng, {4, 2}, -1, 1);
        Tensor mix = make_mix(rng, {3, 2});
        h.check("matmul", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::matmul(a, b), mix));
        }, {a, b}));
    }
    {
        Tensor a = random_param(rng, {3, 5}, -2, 2);
        Tensor b = random_param(rng, {5}, -2, 2);  // broadcast bias row
        Tensor mix = make_mix(rng, {3, 5});
        h.check("add_broadcast", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::add(a, b), mix));
        }, {a, b}));
    }
    {
        Tensor a = random_param(rng, {4, 3}, -2, 2);
        Tensor b = random_param(rng, {4, 3}, -2, 2);
        Tensor mix = make_mix(rng, {4, 3});
        h.check("sub", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::sub(a, b), mix));
        }, {a, b}));
        h.check("mul", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::mul(a, b), mix));
        }, {a, b}));
    }
    {
        Tensor a = random_param(rng, {4, 3}, -2, 2);
        Tensor b = random_param(rng, {4, 3}, 0.5, 2.5);  // away from zero denominators
        Tensor mix = make_mix(rng, {4, 3});
        h.check("div", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::div(a, b), mix));
        }, {a, b}));
    }
    {
        // products are kept away from the relu kink
        Tensor a = random_param(rng, {20}, 0.2, 2.0);
        Tensor b = random_param(rng, {20}, -2.0, -0.2);
        Tensor mix = make_mix(rng, {20});
        h.check("relu", kNonSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::relu(ad::mul(a, b)), mix));
        }, {a, b}));
    }
    {
        Tensor a = random_param(rng, {12}, -2, 2);
        Tensor mix = make_mix(rng, {12});
        h.check("tanh", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::tanh(a), mix));
        }, {a}));
        h.check("exp", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::exp(a), mix));
        }, {a}));
        h.check("neg", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::neg(a), mix));
        }, {a}));
    }
    {
        Tensor a = random_param(rng, {12}, 0.3, 3.0);
        Tensor mix = make_mix(rng, {12});
        h.check("log", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::log(a), mix));
        }, {a}));
        h.check("sqrt", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::sqrt(a), mix));
        }, {a}));
    }
    {
        Tensor a = random_param(rng, {16}, -2, 2);
        Rng sep(12);
        Tensor b = separated_param(sep, {16}, a, 0.2);
        Tensor mix = make_mix(rng, {16});
        h.check("max_pair", kNonSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::max_pair(a, b), mix));
        }, {a, b}));
        h.check("min_pair", kNonSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::min_pair(a, b), mix));
        }, {a, b}));
    }
    {
        // abs away from zero
        Tensor a = random_param(rng, {10}, 0.3, 2.0);
        Tensor s = Tensor::constant({10}, {1, -1, 1, -1, 1, -1, 1, -1, 1, -1});
        Tensor mix = make_mix(rng, {10});
        h.check("abs", kNonSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::abs(ad::mul(a, s)), mix));
        }, {a}));
    }
    {
        // clamp checked strictly inside the window
        Tensor a = random_param(rng, {10}, -0.8, 0.8);
        Tensor mix = make_mix(rng, {10});
        h.check("clamp", kNonSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::clamp(a, -1.0, 1.0), mix));
        }, {a}));
    }
    {
        Tensor a = random_param(rng, {6, 4}, -2, 2);
        Tensor mix = make_mix(rng, {6, 4});
        h.check("log_softmax", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::log_softmax(a), mix));
        }, {a}));
    }
    {
        Tensor a = random_param(rng, {5, 3}, -2, 2);
        h.check("mean", kSmooth, finite_diff_rel_err([&] { return ad::mean(a); }, {a}));
        Tensor mix = make_mix(rng, {3});
        h.check("mean_rows", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::mean_rows(a), mix));
        }, {a}));
        std::vector<int> idx{2, 0, 1, 2, 0};
        Tensor gmix = make_mix(rng, {5});
        h.check("gather_cols", kSmooth, finite_diff_rel_err([&] {
            return ad::sum(ad::mul(ad::gather_cols(a, idx), gmix));
        }, {a}));
    }
    {
        Tensor logits = random_param(rng, {6, 3}, -1.5, 1.5);
        std::vector<int> labels{0, 1, 2, 0, 1, 2};
        h.check("nll", kSmooth, finite_diff_rel_err([&] {
            return disc::nll(disc::make_scores(logits), labels);
        }, {logits}));
        h.check("margin_loss", kNonSmooth, finite_diff_rel_err([&] {
            return disc::margin_loss(disc::make_scores(logits), labels);
        }, {logits}));
    }
    {
        Tensor l1 = random_param(rng, {8, 3}, -1.5, 1.5);
        Tensor l2 = random_param(rng, {8, 3}, -1.5, 1.5);
        h.check("cmd_primitive", kNonSmooth, finite_diff_rel_err([&] {
            return disc::cmd_batch(disc::make_scores(l1), disc::make_scores(l2),
                                   disc::Form::primitive, 1e-7);
        }, {l1, l2}));
        h.check("cmd_dual", kNonSmooth, finite_diff_rel_err([&] {
            return disc::cmd_batch(disc::make_scores(l1), disc::make_scores(l2),
                                   disc::Form::dual, 1e-7);
        }, {l1, l2}));
        h.check("l1_discrepancy", kNonSmooth, finite_diff_rel_err([&] {
            return disc::l1_discrepancy(disc::make_scores(l1), disc::make_scores(l2));
        }, {l1, l2}));
        std::vector<int> hl{0, 1, 2, 0, 1, 2, 0, 1};
        h.check("margin_disparity", kNonSmooth, finite_diff_rel_err([&] {
            return disc::margin_disparity(disc::make_scores(l1), hl);
        }, {l1}));
    }
    {
        // 2-layer tanh MLP end to end
        nets::MlpSpec spec;
        spec.widths = {3, 8, 2};
        spec.activation = nets::Activation::tanh;
        nets::Network net = nets::Network::init(spec, 99);
        Tensor x = random_param(rng, {5, 3}, -1, 1);
        std::vector<int> labels{0, 1, 0, 1, 0};
        std::vector<ad::Tensor> params = net.params();
        params.push_back(x);
        h.check("mlp_tanh", kSmooth, finite_diff_rel_err([&] {
            return disc::nll(disc::make_scores(net.forward(x)), labels);
        }, params));
    }
    {
        // batch norm training path: batch statistics inside the graph
        nets::MlpSpec spec;
        spec.widths = {3, 6, 2};
        spec.activation = nets::Activation::tanh;
        spec.batch_norm = true;
        nets::Network net = nets::Network::init(spec, 17);
        Tensor x = random_param(rng, {8, 3}, -1, 1);
        std::vector<int> labels{0, 1, 0, 1, 0, 1, 0, 1};
        std::vector<ad::Tensor> params = net.params();
        params.push_back(x);
        h.check("batch_norm", kNonSmooth, finite_diff_rel_err([&] {
            return disc::nll(disc::make_scores(net.forward(x)), labels);
        }, params));
    }
    {
        // spectral norm with sigma_hat re-estimated from scratch on every
        // probe, so the finite difference sees sigma as a function of the
        // weight
        Tensor w = random_param(rng, {6, 4}, -1, 1);
        Tensor mix = make_mix(rng, {6, 4});
        nets::SnState init_state;
        { nets::SnState tmp; nets::apply_spectral_norm(w, tmp, 1); init_state = tmp; }
        h.check("spectral_norm", kNonSmooth, finite_diff_rel_err([&] {
            nets::SnState st = init_state;
            return ad::sum(ad::mul(nets::apply_spectral_norm(w, st, 50), mix));
        }, {w}));
    }

    auto t1 = std::chrono::steady_clock::now();
    h.result.seconds = std::chrono::duration<double>(t1 - t0).count();
    return h.result;
}

std::string table(const Result& r) {
    std::ostringstream out;
    out << "op                  worst_rel_err  threshold  status\n";
    for (const auto& c : r.checks) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-19s %-14.3e %-10.0e %s\n", c.name.c_str(),
                      c.worst_rel_err, c.threshold, c.pass ? "ok" : "FAIL");
        out << line;
    }
    char tail[128];
    std::snprintf(tail, sizeof(tail), "worst: %.3e  (%.2fs)  %s\n", r.worst_rel_err, r.seconds,
                  r.all_pass ? "all ok" : "FAILURES");
    out << tail;
    return out.str();
}

}  // namespace jeda::gradcheck
