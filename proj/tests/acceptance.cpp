// Acceptance harness: runs every criterion at its stated tolerance and
// prints one PASS/FAIL/SKIP line per criterion. Exit status is nonzero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "jeda/bound_oracle.hpp"
#include "jeda/config.hpp"
#include "jeda/data.hpp"
#include "jeda/discrepancy.hpp"
#include "jeda/experiment.hpp"
#include "jeda/gradcheck.hpp"
#include "jeda/objective.hpp"

using namespace jeda;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

struct Criterion {
    int id;
    std::string name;
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

std::vector<Criterion> g_results;

void record(int id, const std::string& name, bool pass, const std::string& detail,
            bool skipped = false) {
    Criterion c{id, name, pass, skipped, detail};
    g_results.push_back(c);
    const char* tag = skipped ? "SKIP" : (pass ? "PASS" : "FAIL");
    std::printf("[%s] C%d %s: %s\n", tag, id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---------------------------------------------------------------- C1

void criterion_gradients() {
    auto t0 = clock_type::now();
    auto result = gradcheck::run();
    double sec = seconds_since(t0);
    std::ostringstream detail;
    detail << "worst rel err " << result.worst_rel_err << ", " << result.checks.size()
           << " ops, " << sec << "s";
    bool pass = result.all_pass && result.worst_rel_err < 1e-3 && sec < 30.0;
    if (!pass)
        for (const auto& c : result.checks)
            if (!c.pass) detail << "; FAIL " << c.name << "=" << c.worst_rel_err;
    record(1, "gradient fidelity", pass, detail.str());
}

// ------------------------------------------------------------ C2 C3 C4

void criterion_bound_chain() {
    auto t0 = clock_type::now();
    Rng rng(0xACCE55);
    int domains = 0, hypotheses = 0, violations = 0;
    bool tight_ok = true, lambda_ok = true;
    double worst_tight = 0;

    auto run_pair = [&](const data::DomainPair& pair) {
        bound::Hypothesis fS{pair.true_fS->name, pair.true_fS->fn};
        bound::Hypothesis fT{pair.true_fT->name, pair.true_fT->fn};
        auto grid = bound::build_grid(pair.source_x, pair.target_x, fS, fT, 16, 8, 8);
        auto res = bound::verify_bound_chain(grid, fS, fT, pair.source_x, pair.target_x);
        domains++;
        hypotheses += static_cast<int>(res.reports.size());
        violations += res.violations;
        // Eq. 3 tightness at h = f_S (grid slot 0)
        double tight = std::fabs(res.reports[0].bound_value - res.reports[0].eps_T_fSfT);
        worst_tight = std::max(worst_tight, tight);
        if (tight > 2e-15) tight_ok = false;
        if (res.lambda.lambda > res.eps_T_fSfT + 1e-15) lambda_ok = false;
    };

    for (int trial = 0; trial < 26; ++trial) {
        double sep = 4.0 + 8.0 * rng.uniform();
        double shift = sep * (0.25 + 0.35 * rng.uniform());
        double flip = 0.05 + 0.4 * rng.uniform();
        run_pair(data::gen_mixing_blobs(sep, shift, flip, rng.next_u64(), 160, 160));
    }
    for (int trial = 0; trial < 26; ++trial) {
        double rot = 170.0 * rng.uniform();
        double noise = 0.02 + 0.15 * rng.uniform();
        run_pair(data::gen_twomoons_shift(160, 160, rot, noise, rng.next_u64()));
    }
    double sec = seconds_since(t0);

    {
        std::ostringstream detail;
        detail << domains << " domain pairs, " << hypotheses << " hypothesis evaluations, "
               << violations << " violations, " << sec << "s";
        record(2, "bound inequality, zero tolerance", violations == 0 && domains >= 50 &&
                   hypotheses >= 50 * 100 && sec < 10.0,
               detail.str());
    }
    {
        std::ostringstream detail;
        detail << "max |bound(h=f_S) - eps_T(f_S,f_T)| = " << worst_tight << " over " << domains
               << " pairs";
        record(3, "tightness at h = f_S", tight_ok, detail.str());
    }
    {
        // lambda monotone in flip fraction
        double prev = -1.0;
        bool monotone = true;
        std::ostringstream lam;
        for (double f : {0.0, 0.1, 0.2, 0.3, 0.4}) {
            auto pair = data::gen_mixing_blobs(8.0, 3.2, f, 424242, 500, 500);
            bound::Hypothesis fS{pair.true_fS->name, pair.true_fS->fn};
            bound::Hypothesis fT{pair.true_fT->name, pair.true_fT->fn};
            auto grid = bound::build_grid(pair.source_x, pair.target_x, fS, fT, 24, 8, 8);
            auto res =
                bound::lambda_enumerate(grid, pair.source_x, pair.target_x, fS, fT);
            lam << " " << res.lambda;
            if (res.lambda < prev - 1e-12) monotone = false;
            prev = res.lambda;
        }
        std::ostringstream detail;
        detail << "lambda <= eps_T(f_S,f_T) on all pairs; lambda(flip):" << lam.str();
        record(4, "lambda bound and monotonicity", lambda_ok && monotone, detail.str());
    }
}

// ---------------------------------------------------------------- C5

void criterion_degeneracy() {
    nets::MlpSpec feat_spec;
    feat_spec.widths = {2, 16, 16};
    nets::MlpSpec head_spec;
    head_spec.widths = {16, 16, 2};
    auto g = nets::Network::init(feat_spec, 41);
    auto h = nets::Network::init(head_spec, 42);
    auto f = nets::Network::init(head_spec, 43);
    auto f2 = nets::Network::init(head_spec, 44);
    for (auto* n : {&g, &h, &f, &f2}) n->set_mode(nets::Mode::eval);

    Rng rng(45);
    Matrix xs(32, 2), xt(32, 2);
    for (double& v : xs.data) v = rng.normal();
    for (double& v : xt.data) v = rng.normal();
    ad::Tensor featS = g.forward(ad::Tensor::constant({32, 2}, xs.data));
    ad::Tensor featT = g.forward(ad::Tensor::constant({32, 2}, xt.data));

    double worst_mdd = 0;
    for (disc::Kind k : {disc::Kind::cmd_primitive, disc::Kind::l1}) {
        disc::DiscSpec kind{k, 1e-7};
        auto ours = obj::adversarial_term(featS, featT, h, f, f, kind);  // f1 = f2 = f, all terms
        obj::TermSelect mdd_terms{false, false, true, true};
        auto mdd = obj::adversarial_term(featS, featT, h, f, f, kind, mdd_terms);
        worst_mdd = std::max(worst_mdd, std::fabs(ours.total.item() - mdd.total.item()));
    }

    // mcd: gamma = 1, h aliased to f1, l1 measure, target term only
    obj::Hyperparams mcd_hp;
    mcd_hp.objective = obj::ObjectiveKind::mcd;
    auto R = obj::resolve_objective(mcd_hp);
    auto ours_mcd = obj::adversarial_term(featS, featT, f, f, f2, R.discrepancy, R.terms);
    double hand = disc::l1_discrepancy(disc::make_scores(f.forward(featT)),
                                       disc::make_scores(f2.forward(featT)))
                      .item();
    double worst_mcd = std::fabs(ours_mcd.total.item() - hand);

    std::ostringstream detail;
    detail << "mdd gap " << worst_mdd << ", mcd gap " << worst_mcd << " (tolerance 1e-9)";
    record(5, "degeneracy equivalences", worst_mdd < 1e-9 && worst_mcd < 1e-9, detail.str());
}

// ------------------------------------------------------------- C6 C7

struct ArmResult {
    std::vector<double> accs;
    double median = 0;
    double worst_seed_seconds = 0;
};

ArmResult run_arm(const cfg::ExperimentConfig& base, obj::ObjectiveKind kind,
                  const data::DomainPair& pair) {
    ArmResult out;
    for (uint64_t seed : base.seeds) {
        obj::Hyperparams hp = base.train;
        hp.objective = kind;
        if (kind == obj::ObjectiveKind::mdd)
            hp.discrepancy.kind = disc::Kind::margin_disparity;
        hp.seed = seed;
        auto t0 = clock_type::now();
        auto res = obj::train(hp, base.net, pair);
        out.worst_seed_seconds = std::max(out.worst_seed_seconds, seconds_since(t0));
        out.accs.push_back(res.final_target_acc);
    }
    out.median = experiment::median(out.accs);
    return out;
}

std::string accs_to_string(const std::vector<double>& accs) {
    std::ostringstream out;
    for (double a : accs) out << " " << a;
    return out.str();
}

void criterion_adaptation_lift() {
    cfg::ExperimentConfig config;
    config.dataset.kind = "twomoons";
    config.dataset.n_source = 2000;
    config.dataset.n_target = 2000;
    config.dataset.rotation_deg = 30.0;
    config.dataset.noise_sigma = 0.1;
    config.dataset.seed = 20240601;
    config.train.objective = obj::ObjectiveKind::original;
    config.train.discrepancy.kind = disc::Kind::cmd_primitive;
    config.train.gamma = 1.0;
    config.train.lr = 1e-3;
    config.train.batch_size = 128;
    config.train.total_steps = 2000;
    config.train.inner_g_steps = 4;
    config.train.constraint_weight = 1.0;
    config.net.extractor_hidden = {64, 64};
    config.net.head_hidden = {64};
    config.net.spectral_norm = true;
    config.seeds = {1, 2, 3, 4, 5};

    auto pair = cfg::build_dataset(config.dataset);
    ArmResult ours = run_arm(config, obj::ObjectiveKind::original, pair);
    ArmResult baseline = run_arm(config, obj::ObjectiveKind::source_only, pair);

    double lift = ours.median - baseline.median;
    std::ostringstream detail;
    detail << "adapted median " << ours.median << " (accs:" << accs_to_string(ours.accs)
           << "), source-only median " << baseline.median << " (accs:"
           << accs_to_string(baseline.accs) << "), lift " << lift * 100 << " pts, worst seed "
           << ours.worst_seed_seconds << "s";
    bool pass = lift >= 0.10 && ours.worst_seed_seconds < 120.0 &&
                baseline.worst_seed_seconds < 120.0;
    record(6, "two-moons adaptation lift >= 10 points", pass, detail.str());
}

void criterion_joint_error_scenario() {
    cfg::ExperimentConfig config;
    config.dataset.kind = "blobs";
    config.dataset.n_source = 2000;
    config.dataset.n_target = 2000;
    config.dataset.separation = 8.0;
    config.dataset.shift = 3.2;
    config.dataset.flip_fraction = 0.3;
    config.dataset.seed = 20240602;
    config.train.discrepancy.kind = disc::Kind::cmd_primitive;
    config.train.eta = 0.9;
    config.train.gamma = 1.0;
    config.train.lr = 1e-3;
    config.train.batch_size = 128;
    config.train.total_steps = 2000;
    config.train.inner_g_steps = 4;
    config.train.constraint_weight = 1.0;
    config.net.extractor_hidden = {64, 64};
    config.net.head_hidden = {64};
    config.net.spectral_norm = true;
    config.seeds = {1, 2, 3, 4, 5};

    auto pair = cfg::build_dataset(config.dataset);
    ArmResult ours = run_arm(config, obj::ObjectiveKind::alternative, pair);
    ArmResult mdd = run_arm(config, obj::ObjectiveKind::mdd, pair);

    double gap = ours.median - mdd.median;
    std::ostringstream detail;
    detail << "alternative median " << ours.median << " (accs:" << accs_to_string(ours.accs)
           << "), mdd median " << mdd.median << " (accs:" << accs_to_string(mdd.accs)
           << "), gap " << gap * 100 << " pts, worst seed " << ours.worst_seed_seconds << "s";
    bool pass =
        gap >= 0.10 && ours.worst_seed_seconds < 120.0 && mdd.worst_seed_seconds < 120.0;
    record(7, "joint-error scenario beats mdd by >= 10 points", pass, detail.str());
}

// ---------------------------------------------------------------- C8

void criterion_digits() {
    const char* env = std::getenv("JEDA_DIGITS_DIR");
    std::vector<std::string> roots;
    if (env && *env) roots.push_back(env);
    roots.push_back("data/digits");
    roots.push_back("../data/digits");

    std::string root;
    for (const auto& r : roots) {
        if (fs::exists(fs::path(r) / "mnist-train-images.idx")) {
            root = r;
            break;
        }
    }
    if (root.empty()) {
        record(8, "digit protocol", true,
               "IDX files not present (looked for data/digits/mnist-train-images.idx); skipped",
               /*skipped=*/true);
        return;
    }

    auto t0 = clock_type::now();
    data::DigitFiles mnist{(fs::path(root) / "mnist-train-images.idx").string(),
                           (fs::path(root) / "mnist-train-labels.idx").string(), "", ""};
    data::DigitFiles usps{(fs::path(root) / "usps-train-images.idx").string(),
                          (fs::path(root) / "usps-train-labels.idx").string(),
                          (fs::path(root) / "usps-test-images.idx").string(),
                          (fs::path(root) / "usps-test-labels.idx").string()};
    auto pair = data::digit_subset_protocol(mnist, usps, 20240603);

    obj::Hyperparams hp;
    hp.objective = obj::ObjectiveKind::alternative;
    hp.discrepancy.kind = disc::Kind::cmd_primitive;
    hp.eta = 0.9;
    hp.lr = 1e-3;
    hp.batch_size = 128;
    hp.total_steps = 1500;
    hp.seed = 1;
    obj::NetConfig nc;
    nc.extractor_hidden = {256, 128};
    nc.head_hidden = {128};
    nc.spectral_norm = true;
    auto adapted = obj::train(hp, nc, pair);
    hp.objective = obj::ObjectiveKind::source_only;
    auto source_only = obj::train(hp, nc, pair);
    double sec = seconds_since(t0);

    double lift = adapted.final_target_acc - source_only.final_target_acc;
    std::ostringstream detail;
    detail << "adapted " << adapted.final_target_acc << ", source-only "
           << source_only.final_target_acc << ", lift " << lift * 100 << " pts, " << sec << "s";
    record(8, "digit protocol", lift >= 0.05 && sec < 600.0, detail.str());
}

// ---------------------------------------------------------------- C9

void criterion_determinism() {
    std::string dir_a = "acc_det_a", dir_b = "acc_det_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    cfg::ExperimentConfig config;
    config.dataset.kind = "twomoons";
    config.dataset.n_source = 256;
    config.dataset.n_target = 256;
    config.train.total_steps = 40;
    config.train.batch_size = 64;
    config.train.lr = 1e-3;
    config.net.extractor_hidden = {16};
    config.net.head_hidden = {16};
    config.seeds = {7};
    config.out_dir = dir_a;

    experiment::run_train(config);
    auto echoed = cfg::load_config((fs::path(dir_a) / "config.echo").string());
    experiment::run_train(echoed, dir_b);

    std::string a = slurp((fs::path(dir_a) / "seed_7" / "metrics.csv").string());
    std::string b = slurp((fs::path(dir_b) / "seed_7" / "metrics.csv").string());
    bool pass = !a.empty() && a == b;
    std::ostringstream detail;
    detail << "metrics.csv " << a.size() << " bytes, echoed rerun "
           << (pass ? "identical" : "DIFFERS");
    record(9, "determinism from echoed config", pass, detail.str());
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

// --------------------------------------------------------------- C10

void criterion_loss_identities() {
    Rng rng(0x1DE47);
    double worst_sym = 0, worst_self = 0, worst_dual = 0;
    int dual_cases = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        int c = 2 + rng.uniform_int(4);
        std::vector<double> r1(c), r2(c);
        double s1 = 0, s2 = 0;
        for (int j = 0; j < c; ++j) {
            r1[j] = 0.01 + rng.uniform();
            r2[j] = 0.01 + rng.uniform();
            s1 += r1[j];
            s2 += r2[j];
        }
        for (int j = 0; j < c; ++j) {
            r1[j] /= s1;
            r2[j] /= s2;
        }
        double ab = disc::cmd_pointwise(r1, r2, disc::Form::primitive, 1e-7);
        double ba = disc::cmd_pointwise(r2, r1, disc::Form::primitive, 1e-7);
        worst_sym = std::max(worst_sym, std::fabs(ab - ba));
        worst_self =
            std::max(worst_self, std::fabs(disc::cmd_pointwise(r1, r1, disc::Form::primitive,
                                                               1e-7)));
    }
    for (int trial = 0; trial < 10000; ++trial) {
        double p = 0.01 + 0.98 * rng.uniform();
        double q = 0.01 + 0.98 * rng.uniform();
        std::vector<double> f1{p, 1.0 - p}, f2{q, 1.0 - q};
        int y1 = p >= 0.5 ? 0 : 1, y2 = q >= 0.5 ? 0 : 1;
        if (y1 == y2) continue;
        dual_cases++;
        double dual = disc::cmd_pointwise(f1, f2, disc::Form::dual, 1e-7);
        double collapsed = 2 * std::log(f1[y1]) + 2 * std::log(f2[y2]);
        worst_dual = std::max(worst_dual, std::fabs(dual - collapsed));
    }
    std::ostringstream detail;
    detail << "swap symmetry " << worst_sym << ", self-value " << worst_self
           << ", two-class dual collapse " << worst_dual << " over 10k pairs (" << dual_cases
           << " disagreements)";
    bool pass = worst_sym < 1e-12 && worst_self < 1e-12 && worst_dual < 1e-12;
    record(10, "loss-form identities", pass, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
    bool quick = argc > 1 && std::string(argv[1]) == "--quick";

    criterion_gradients();
    criterion_bound_chain();
    criterion_degeneracy();
    if (quick) {
        std::printf("[SKIP] C6, C7 skipped under --quick\n");
    } else {
        criterion_adaptation_lift();
        criterion_joint_error_scenario();
    }
    criterion_digits();
    criterion_determinism();
    criterion_loss_identities();

    int failures = 0;
    for (const auto& c : g_results)
        if (!c.pass && !c.skipped) failures++;
    std::printf("%d criteria run, %d failed\n", static_cast<int>(g_results.size()), failures);
    return failures == 0 ? 0 : 1;
}
