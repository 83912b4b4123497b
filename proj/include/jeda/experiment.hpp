#pragma once

#include <string>
#include <vector>

#include "jeda/bound_oracle.hpp"
#include "jeda/config.hpp"
#include "jeda/objective.hpp"

// Runs experiments end to end: datasets from config, one training run per
// seed, metrics/checkpoint/summary files, and the bound verification
// pipeline. Every run directory gets a config.echo that reproduces it.

namespace jeda::experiment {

struct TrainOutcome {
    std::string out_dir;
    std::vector<double> target_accs;  // per seed, final full evaluation
    std::vector<double> source_accs;
    double median_target_acc = 0;
    double iqr_low = 0, iqr_high = 0;
};

// Writes out_dir/config.echo, out_dir/summary.txt and per seed
// out_dir/seed_<s>/{metrics.csv, checkpoint.txt}.
TrainOutcome run_train(const cfg::ExperimentConfig& config,
                       const std::string& out_dir_override = "");

struct BoundOutcome {
    std::string out_dir;
    bound::VerifyResult result;
};

// Writes out_dir/{config.echo, bound.csv, bound_summary.txt}. The caller
// decides how to treat violations.
BoundOutcome run_verify_bound(const cfg::ExperimentConfig& config,
                              const std::string& out_dir_override = "");

void write_metrics_csv(const std::vector<obj::StepMetrics>& history, const std::string& path);
std::vector<obj::StepMetrics> read_metrics_csv(const std::string& path);

void save_checkpoint(const obj::TrainState& state, const std::string& path);
// Objective kind decides aliasing, so the config travels with the load.
obj::TrainState load_checkpoint(const std::string& path, const obj::Hyperparams& hp);

double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);

}  // namespace jeda::experiment
