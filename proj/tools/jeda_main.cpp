// Command-line harness for the jeda shared library. This translation
// unit talks to the library exclusively through the C API in jeda/jeda.h.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jeda/jeda.h"

namespace {

int fail(jeda_status status) {
    std::fprintf(stderr, "error: %s\n", jeda_last_error());
    return static_cast<int>(status);
}

struct ConfigHandle {
    jeda_config* cfg = nullptr;
    ~ConfigHandle() { jeda_config_free(cfg); }
};

int make_config(const std::string& path, const std::vector<std::string>& sets,
                ConfigHandle& out) {
    jeda_status st = path.empty() ? jeda_config_create(&out.cfg)
                                  : jeda_config_load(path.c_str(), &out.cfg);
    if (st != JEDA_OK) return fail(st);
    for (const std::string& kv : sets) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            return 1;
        }
        std::string key = kv.substr(0, eq);
        std::string value = kv.substr(eq + 1);
        st = jeda_config_set(out.cfg, key.c_str(), value.c_str());
        if (st != JEDA_OK) return fail(st);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jeda: joint-error-aware domain adaptation experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;

    auto add_config_opts = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "config file (key = value lines)");
        cmd->add_option("-s,--set", overrides, "override a config key (key=value)")
            ->take_all();
        cmd->add_option("-o,--out", out_dir, "output directory (overrides run.out_dir)");
    };

    CLI::App* cmd_train = app.add_subcommand("train", "run the configured experiment per seed");
    add_config_opts(cmd_train);

    CLI::App* cmd_verify =
        app.add_subcommand("verify-bound", "check the 0-1-loss bound chain on synthetic data");
    add_config_opts(cmd_verify);

    CLI::App* cmd_plot = app.add_subcommand("plot", "emit an SVG report");
    std::string plot_kind, plot_run, plot_metrics, plot_out;
    int seed_index = 0;
    cmd_plot->add_option("-k,--kind", plot_kind, "boundary | curves | marginal_discrepancy")
        ->required();
    cmd_plot->add_option("-r,--run", plot_run, "training run directory (boundary)");
    cmd_plot->add_option("--seed-index", seed_index, "which seed's checkpoint (boundary)");
    cmd_plot->add_option("-m,--metrics", plot_metrics, "metrics.csv (marginal_discrepancy)");
    cmd_plot->add_option("-o,--out", plot_out, "output SVG path")->required();

    CLI::App* cmd_gradcheck =
        app.add_subcommand("grad-check", "finite-difference check of every op");

    CLI::App* cmd_bench = app.add_subcommand("bench", "time the core kernels");

    CLI11_PARSE(app, argc, argv);

    if (cmd_train->parsed()) {
        ConfigHandle cfg;
        if (int rc = make_config(config_path, overrides, cfg)) return rc;
        jeda_status st = jeda_train(cfg.cfg, out_dir.empty() ? nullptr : out_dir.c_str());
        if (st != JEDA_OK) return fail(st);
        std::printf("training complete\n");
        return 0;
    }
    if (cmd_verify->parsed()) {
        ConfigHandle cfg;
        if (int rc = make_config(config_path, overrides, cfg)) return rc;
        jeda_status st = jeda_verify_bound(cfg.cfg, out_dir.empty() ? nullptr : out_dir.c_str());
        if (st != JEDA_OK) return fail(st);
        std::printf("bound chain verified: no violations\n");
        return 0;
    }
    if (cmd_plot->parsed()) {
        jeda_status st;
        if (plot_kind == "boundary") {
            if (plot_run.empty()) {
                std::fprintf(stderr, "error: --run is required for boundary plots\n");
                return 1;
            }
            st = jeda_plot_boundary(plot_run.c_str(), seed_index, plot_out.c_str());
        } else if (plot_kind == "curves") {
            st = jeda_plot_curves(plot_out.c_str());
        } else if (plot_kind == "marginal_discrepancy") {
            if (plot_metrics.empty()) {
                std::fprintf(stderr, "error: --metrics is required for marginal plots\n");
                return 1;
            }
            st = jeda_plot_marginal(plot_metrics.c_str(), plot_out.c_str());
        } else {
            std::fprintf(stderr, "error: unknown plot kind '%s'\n", plot_kind.c_str());
            return 1;
        }
        if (st != JEDA_OK) return fail(st);
        std::printf("wrote %s\n", plot_out.c_str());
        return 0;
    }
    if (cmd_gradcheck->parsed()) {
        char* report = nullptr;
        int passed = 0;
        jeda_status st = jeda_grad_check(&report, &passed);
        if (report) {
            std::fputs(report, stdout);
            jeda_string_free(report);
        }
        if (st != JEDA_OK) return fail(st);
        return 0;
    }
    if (cmd_bench->parsed()) {
        char* report = nullptr;
        jeda_status st = jeda_bench(&report);
        if (report) {
            std::fputs(report, stdout);
            jeda_string_free(report);
        }
        if (st != JEDA_OK) return fail(st);
        return 0;
    }
    return 1;
}
