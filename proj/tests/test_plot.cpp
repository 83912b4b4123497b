#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "jeda/discrepancy.hpp"
#include "jeda/experiment.hpp"
#include "jeda/plot.hpp"

using namespace jeda;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int count_occurrences(const std::string& hay, const std::string& needle) {
    int n = 0;
    size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
        n++;
        pos += needle.size();
    }
    return n;
}

cfg::ExperimentConfig tiny_train_config(const std::string& out_dir) {
    cfg::ExperimentConfig config;
    config.dataset.kind = "twomoons";
    config.dataset.n_source = 48;
    config.dataset.n_target = 48;
    config.train.total_steps = 3;
    config.train.batch_size = 16;
    config.train.lr = 1e-3;
    config.net.extractor_hidden = {8};
    config.net.head_hidden = {8};
    config.net.spectral_norm = false;
    config.seeds = {1};
    config.out_dir = out_dir;
    return config;
}

}  // namespace

TEST_CASE("curve samples agree with cmd_pointwise and vanish at zero gap") {
    std::vector<double> gaps{-3.0, -1.0, 0.0, 0.5, 2.5};
    auto pts = plot::discrepancy_curves(gaps);
    REQUIRE(pts.size() == gaps.size());
    for (size_t i = 0; i < gaps.size(); ++i) {
        double p = 1.0 / (1.0 + std::exp(-gaps[i]));
        std::vector<double> f1{p, 1.0 - p}, f2{1.0 - p, p};
        CHECK(std::fabs(pts[i].primitive -
                        disc::cmd_pointwise(f1, f2, disc::Form::primitive, 1e-7)) < 1e-12);
        CHECK(std::fabs(pts[i].dual - disc::cmd_pointwise(f1, f2, disc::Form::dual, 1e-7)) <
              1e-12);
    }
    CHECK(pts[2].gap == 0.0);
    CHECK(pts[2].primitive == 0.0);  // symmetric hypotheses at the origin
    CHECK(pts[2].l1 == 0.0);
}

TEST_CASE("curves plot is well-formed SVG with three polylines") {
    std::string path = "test_curves.svg";
    plot::plot_curves(path);
    std::string svg = slurp(path);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count_occurrences(svg, "<polyline") == 3);
    fs::remove(path);
}

TEST_CASE("metrics csv read/write round trip and schema guard") {
    std::vector<obj::StepMetrics> hist(3);
    for (int i = 0; i < 3; ++i) {
        hist[i].step = i;
        hist[i].eps_S_h = 0.5 / (i + 1);
        hist[i].adv_term = -0.25 * i;
        hist[i].tgt_acc_h = 0.125 * i;
    }
    std::string path = "test_metrics.csv";
    experiment::write_metrics_csv(hist, path);
    auto back = experiment::read_metrics_csv(path);
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back[i].step == hist[i].step);
        CHECK(back[i].eps_S_h == hist[i].eps_S_h);
        CHECK(back[i].adv_term == hist[i].adv_term);
        CHECK(back[i].tgt_acc_h == hist[i].tgt_acc_h);
    }

    {
        std::ofstream out(path);
        out << "# schema: jeda.metrics.v999\nstep\n0\n";
    }
    CHECK_THROWS_AS(experiment::read_metrics_csv(path), DataError);
    {
        std::ofstream out(path);
        out << "# schema: jeda.metrics.v1\nstep,nope\n0,1\n";
    }
    CHECK_THROWS_AS(experiment::read_metrics_csv(path), DataError);
    fs::remove(path);
}

TEST_CASE("run_train writes echo, metrics, checkpoint and summary") {
    std::string out_dir = "test_run_train";
    fs::remove_all(out_dir);
    auto config = tiny_train_config(out_dir);
    auto outcome = experiment::run_train(config);
    CHECK(fs::exists(fs::path(out_dir) / "config.echo"));
    CHECK(fs::exists(fs::path(out_dir) / "summary.txt"));
    CHECK(fs::exists(fs::path(out_dir) / "seed_1" / "metrics.csv"));
    CHECK(fs::exists(fs::path(out_dir) / "seed_1" / "checkpoint.txt"));
    CHECK(outcome.target_accs.size() == 1);

    auto rows = experiment::read_metrics_csv((fs::path(out_dir) / "seed_1" / "metrics.csv").string());
    CHECK(rows.size() == 3);  // metrics row count == total_steps

    // the echo reparses to the identical canonical form
    std::string echo = slurp((fs::path(out_dir) / "config.echo").string());
    CHECK(echo == cfg::serialize_config(cfg::parse_config(echo)));
    fs::remove_all(out_dir);
}

TEST_CASE("rerunning from the echoed config reproduces metrics bit-for-bit") {
    std::string dir_a = "test_echo_a", dir_b = "test_echo_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    auto config = tiny_train_config(dir_a);
    experiment::run_train(config);

    auto echoed = cfg::load_config((fs::path(dir_a) / "config.echo").string());
    experiment::run_train(echoed, dir_b);

    std::string a = slurp((fs::path(dir_a) / "seed_1" / "metrics.csv").string());
    std::string b = slurp((fs::path(dir_b) / "seed_1" / "metrics.csv").string());
    CHECK(a == b);
    CHECK(!a.empty());
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("boundary plot references every sample point") {
    std::string out_dir = "test_boundary_run";
    fs::remove_all(out_dir);
    auto config = tiny_train_config(out_dir);
    experiment::run_train(config);

    std::string svg_path = "test_boundary.svg";
    plot::plot_boundary(out_dir, 0, svg_path);
    std::string svg = slurp(svg_path);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count_occurrences(svg, "<circle") == 48 + 48);
    fs::remove(svg_path);
    fs::remove_all(out_dir);
}

TEST_CASE("marginal discrepancy plot from a metrics file") {
    std::vector<obj::StepMetrics> hist(5);
    for (int i = 0; i < 5; ++i) {
        hist[i].step = i;
        hist[i].eps_T_f1f2 = 0.1 * i;
        hist[i].eps_S_f1f2 = 0.05;
    }
    std::string csv = "test_marginal.csv";
    experiment::write_metrics_csv(hist, csv);
    std::string svg_path = "test_marginal.svg";
    plot::plot_marginal_discrepancy(csv, svg_path);
    std::string svg = slurp(svg_path);
    CHECK(count_occurrences(svg, "<polyline") == 1);
    fs::remove(csv);
    fs::remove(svg_path);

    CHECK_THROWS_AS(plot::plot_marginal_discrepancy("missing.csv", "x.svg"), DataError);
}

TEST_CASE("run_verify_bound writes reports and summary") {
    std::string out_dir = "test_verify_bound";
    fs::remove_all(out_dir);
    cfg::ExperimentConfig config;
    config.dataset.kind = "blobs";
    config.dataset.n_source = 120;
    config.dataset.n_target = 120;
    config.dataset.flip_fraction = 0.3;
    config.bound.thresholds_per_axis = 8;
    config.bound.angles = 4;
    config.bound.offsets_per_angle = 4;
    config.out_dir = out_dir;
    auto outcome = experiment::run_verify_bound(config);
    CHECK(outcome.result.violations == 0);
    CHECK(fs::exists(fs::path(out_dir) / "bound.csv"));
    CHECK(fs::exists(fs::path(out_dir) / "bound_summary.txt"));

    // h = f_S row: bound_value equals eps_T(f_S, f_T)
    const auto& r0 = outcome.result.reports[0];
    CHECK(r0.bound_value == doctest::Approx(r0.eps_T_fSfT).epsilon(1e-15));
    // lambda column present and bounded by eps_T(f_S, f_T)
    CHECK(r0.lambda <= outcome.result.eps_T_fSfT + 1e-15);
    fs::remove_all(out_dir);
}

TEST_CASE("checkpoint save/load keeps aliasing of baseline configurations") {
    obj::Hyperparams hp;
    hp.objective = obj::ObjectiveKind::mcd;
    hp.total_steps = 2;
    hp.batch_size = 16;
    hp.lr = 1e-3;
    obj::NetConfig nc;
    nc.extractor_hidden = {8};
    nc.head_hidden = {8};
    nc.spectral_norm = false;
    auto pair = data::gen_twomoons_shift(48, 48, 20, 0.1, 3);
    auto res = obj::train(hp, nc, pair);

    std::string path = "test_ckpt.txt";
    experiment::save_checkpoint(res.state, path);
    auto loaded = experiment::load_checkpoint(path, hp);
    CHECK(loaded.h == loaded.f1);  // mcd alias restored
    auto pred_a = obj::predict(res.state, pair.target_x);
    auto pred_b = obj::predict(loaded, pair.target_x);
    CHECK(pred_a == pred_b);
    fs::remove(path);
}
