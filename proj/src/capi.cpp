#include "jeda/jeda.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "jeda/config.hpp"
#include "jeda/experiment.hpp"
#include "jeda/gradcheck.hpp"
#include "jeda/plot.hpp"

struct jeda_config {
    jeda::cfg::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
jeda_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const jeda::ConfigError& e) {
        g_last_error = e.what();
        return JEDA_ERR_USAGE;
    } catch (const jeda::DataError& e) {
        g_last_error = e.what();
        return JEDA_ERR_DATA;
    } catch (const jeda::ContractError& e) {
        g_last_error = e.what();
        return JEDA_ERR_CHECK;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return JEDA_ERR_CHECK;
    }
}

}  // namespace

extern "C" {

const char* jeda_version(void) { return "jeda 1.0.0"; }

const char* jeda_last_error(void) { return g_last_error.c_str(); }

void jeda_string_free(char* s) { std::free(s); }

jeda_status jeda_config_create(jeda_config** out) {
    if (!out) {
        g_last_error = "config_create: out is NULL";
        return JEDA_ERR_USAGE;
    }
    return guarded([&] {
        *out = new jeda_config{};
        return JEDA_OK;
    });
}

jeda_status jeda_config_load(const char* path, jeda_config** out) {
    if (!path || !out) {
        g_last_error = "config_load: NULL argument";
        return JEDA_ERR_USAGE;
    }
    return guarded([&] {
        auto cfg = jeda::cfg::load_config(path);
        *out = new jeda_config{std::move(cfg)};
        return JEDA_OK;
    });
}

jeda_status jeda_config_parse(const char* text, jeda_config** out) {
    if (!text || !out) {
        g_last_error = "config_parse: NULL argument";
        return JEDA_ERR_USAGE;
    }
    return guarded([&] {
        auto cfg = jeda::cfg::parse_config(text);
        *out = new jeda_config{std::move(cfg)};
        return JEDA_OK;
    });
}

jeda_status jeda_config_set(jeda_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) {
        g_last_error = "config_set: NULL argument";
        return JEDA_ERR_USAGE;
    }
    return guarded([&] {
        jeda::cfg::apply_key(cfg->cfg, key, value);
        return JEDA_OK;
    });
}

jeda_status jeda_config_serialize(const jeda_config* cfg, char** out_text) {
    if (!cfg || !out_text) {
        g_last_error = "config_serialize: NULL argument";
        return JEDA_ERR_USAGE;
    }
    return guarded([&] {
        *out_text = dup_string(jeda::cfg::serialize_config(cfg->cfg));
        return JEDA_OK;
    });
}

void jeda_config_free(jeda_config* cfg) { delete cfg; }

jeda_status jeda_train(const jeda_config* cfg, const char* out_dir) {
    if (!cfg) {
        g_last_error = "train: config is NULL";
        return JEDA_ERR_USAGE;
    }
    return guarded([&] {
        jeda::experiment::run_train(cfg->cfg, out_dir ? out_dir : "");
        return JEDA_OK;
    });
}

jeda_status jeda_verify_bound(const jeda_config* cfg, const char* out_dir) {
    if (!cfg) {
        g_last_error = "verify_bound: config is NULL";
        return JEDA_ERR_USAGE;
    }
    return guarded([&] {
        auto outcome = jeda::experiment::run_verify_bound(cfg->cfg, out_dir ? out_dir : "");
        if (outcome.result.violations > 0) {
            std::ostringstream msg;
            msg << outcome.result.violations << " bound violation(s); see "
                << outcome.out_dir << "/bound_summary.txt";
            g_last_error = msg.str();
            return JEDA_ERR_CHECK;
        }
        return JEDA_OK;
    });
}

jeda_status jeda_plot_boundary(const char* run_dir, int seed_index, const char* out_svg) {
    if (!run_dir || !out_svg) {
        g_last_error = "plot_boundary: NULL argument";
        return JEDA_ERR_USAGE;
    }
    return guarded([&] {
        jeda::plot::plot_boundary(run_dir, seed_index, out_svg);
        return JEDA_OK;
    });
}

jeda_status jeda_plot_curves(const char* out_svg) {
    if (!out_svg) {
        g_last_error = "plot_curves: NULL argument";
        return JEDA_ERR_USAGE;
    }
    return guarded([&] {
        jeda::plot::plot_curves(out_svg);
        return JEDA_OK;
    });
}

jeda_status jeda_plot_marginal(const char* metrics_csv, const char* out_svg) {
    if (!metrics_csv || !out_svg) {
        g_last_error = "plot_marginal: NULL argument";
        return JEDA_ERR_USAGE;
    }
    return guarded([&] {
        jeda::plot::plot_marginal_discrepancy(metrics_csv, out_svg);
        return JEDA_OK;
    });
}

jeda_status jeda_grad_check(char** report_out, int* passed) {
    return guarded([&] {
        auto result = jeda::gradcheck::run();
        if (report_out) *report_out = dup_string(jeda::gradcheck::table(result));
        if (passed) *passed = result.all_pass ? 1 : 0;
        if (!result.all_pass) {
            g_last_error = "gradient check failed; see report";
            return JEDA_ERR_CHECK;
        }
        return JEDA_OK;
    });
}

jeda_status jeda_bench(char** report_out) {
    return guarded([&] {
        using clock = std::chrono::steady_clock;
        std::ostringstream report;

        {
            jeda::Rng rng(1);
            int m = 128, k = 64, n = 64;
            std::vector<double> av(static_cast<size_t>(m) * k), bv(static_cast<size_t>(k) * n);
            for (double& x : av) x = rng.normal();
            for (double& x : bv) x = rng.normal();
            auto a = jeda::ad::Tensor::parameter({m, k}, av);
            auto b = jeda::ad::Tensor::parameter({k, n}, bv);
            int reps = 200;
            auto t0 = clock::now();
            double sink = 0;
            for (int i = 0; i < reps; ++i) sink += jeda::ad::matmul(a, b).values()[0];
            double sec = std::chrono::duration<double>(clock::now() - t0).count();
            double gflops = 2.0 * m * k * n * reps / sec / 1e9;
            report << "matmul 128x64x64: " << gflops << " GFLOP/s (sink " << sink << ")\n";
        }
        {
            auto pair = jeda::data::gen_twomoons_shift(512, 512, 30.0, 0.1, 7);
            jeda::obj::Hyperparams hp;
            hp.total_steps = 20;
            hp.batch_size = 128;
            hp.lr = 1e-3;
            jeda::obj::NetConfig nc;
            auto t0 = clock::now();
            jeda::obj::train(hp, nc, pair);
            double sec = std::chrono::duration<double>(clock::now() - t0).count();
            report << "minimax training: " << (hp.total_steps / sec) << " steps/s\n";
        }
        if (report_out) *report_out = dup_string(report.str());
        return JEDA_OK;
    });
}

}  // extern "C"
