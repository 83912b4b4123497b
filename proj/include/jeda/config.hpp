#pragma once

#include <string>
#include <vector>

#include "jeda/common.hpp"
#include "jeda/data.hpp"
#include "jeda/objective.hpp"

// Experiment configuration: flat `section.key = value` lines, `#`
// comments, unknown keys rejected. serialize() emits every key in a
// canonical order so an echoed config reproduces the run bit-for-bit.

namespace jeda::cfg {

struct DatasetConfig {
    std::string kind = "twomoons";  // twomoons | blobs | digits
    uint64_t seed = 7;
    int n_source = 2000;
    int n_target = 2000;
    // twomoons
    double rotation_deg = 30.0;
    double noise_sigma = 0.1;
    // blobs
    double separation = 8.0;
    double shift = 3.2;
    double flip_fraction = 0.3;
    // digits (IDX files)
    std::string source_train_images, source_train_labels;
    std::string target_train_images, target_train_labels;
    std::string target_test_images, target_test_labels;
};

struct BoundConfig {
    int thresholds_per_axis = 16;
    int angles = 8;
    int offsets_per_angle = 8;
};

struct ReportConfig {
    bool export_data = false;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    obj::Hyperparams train;  // per-run seed comes from `seeds`
    obj::NetConfig net;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string out_dir = "runs/exp";
    BoundConfig bound;
    ReportConfig report;
};

// Throws ConfigError with a line or key diagnostic.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Apply one key=value pair (CLI overrides); throws ConfigError on unknown
// keys or bad values.
void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string serialize_config(const ExperimentConfig& cfg);

data::DomainPair build_dataset(const DatasetConfig& ds);

// Output directory resolution: relative paths land under $JEDA_OUT_ROOT
// when that is set.
std::string resolve_out_dir(const std::string& dir);

}  // namespace jeda::cfg
