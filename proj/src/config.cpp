#include "jeda/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace jeda::cfg {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key " + key + ": expected a number, got '" + v + "'");
    return d;
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        int i = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return i;
    } catch (...) {
        throw ConfigError("key " + key + ": expected an integer, got '" + v + "'");
    }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        uint64_t i = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return i;
    } catch (...) {
        throw ConfigError("key " + key + ": expected an unsigned integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key " + key + ": expected true/false, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::istringstream in(v);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(parse_int(key, tok));
    }
    return out;
}

std::vector<uint64_t> parse_u64_list(const std::string& key, const std::string& v) {
    std::vector<uint64_t> out;
    std::istringstream in(v);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(parse_u64(key, tok));
    }
    if (out.empty()) throw ConfigError("key " + key + ": expected at least one entry");
    return out;
}

obj::ObjectiveKind parse_objective(const std::string& v) {
    if (v == "original") return obj::ObjectiveKind::original;
    if (v == "alternative") return obj::ObjectiveKind::alternative;
    if (v == "mdd") return obj::ObjectiveKind::mdd;
    if (v == "mcd") return obj::ObjectiveKind::mcd;
    if (v == "source_only") return obj::ObjectiveKind::source_only;
    throw ConfigError("key train.objective: unknown value '" + v + "'");
}

const char* objective_name(obj::ObjectiveKind k) {
    switch (k) {
        case obj::ObjectiveKind::original: return "original";
        case obj::ObjectiveKind::alternative: return "alternative";
        case obj::ObjectiveKind::mdd: return "mdd";
        case obj::ObjectiveKind::mcd: return "mcd";
        case obj::ObjectiveKind::source_only: return "source_only";
    }
    return "original";
}

disc::Kind parse_discrepancy(const std::string& v) {
    if (v == "cmd_primitive") return disc::Kind::cmd_primitive;
    if (v == "cmd_dual") return disc::Kind::cmd_dual;
    if (v == "l1") return disc::Kind::l1;
    if (v == "margin_disparity") return disc::Kind::margin_disparity;
    throw ConfigError("key train.discrepancy: unknown value '" + v + "'");
}

const char* discrepancy_name(disc::Kind k) {
    switch (k) {
        case disc::Kind::cmd_primitive: return "cmd_primitive";
        case disc::Kind::cmd_dual: return "cmd_dual";
        case disc::Kind::l1: return "l1";
        case disc::Kind::margin_disparity: return "margin_disparity";
    }
    return "cmd_primitive";
}

std::string int_list_csv(const std::vector<int>& v) {
    std::ostringstream out;
    for (size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    return out.str();
}

}  // namespace

void apply_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
    if (key == "dataset.kind") {
        if (value != "twomoons" && value != "blobs" && value != "digits")
            throw ConfigError("key dataset.kind: unknown value '" + value + "'");
        c.dataset.kind = value;
    } else if (key == "dataset.seed") {
        c.dataset.seed = parse_u64(key, value);
    } else if (key == "dataset.n_source") {
        c.dataset.n_source = parse_int(key, value);
    } else if (key == "dataset.n_target") {
        c.dataset.n_target = parse_int(key, value);
    } else if (key == "dataset.rotation_deg") {
        c.dataset.rotation_deg = parse_double(key, value);
    } else if (key == "dataset.noise_sigma") {
        c.dataset.noise_sigma = parse_double(key, value);
    } else if (key == "dataset.separation") {
        c.dataset.separation = parse_double(key, value);
    } else if (key == "dataset.shift") {
        c.dataset.shift = parse_double(key, value);
    } else if (key == "dataset.flip_fraction") {
        c.dataset.flip_fraction = parse_double(key, value);
    } else if (key == "dataset.source_train_images") {
        c.dataset.source_train_images = value;
    } else if (key == "dataset.source_train_labels") {
        c.dataset.source_train_labels = value;
    } else if (key == "dataset.target_train_images") {
        c.dataset.target_train_images = value;
    } else if (key == "dataset.target_train_labels") {
        c.dataset.target_train_labels = value;
    } else if (key == "dataset.target_test_images") {
        c.dataset.target_test_images = value;
    } else if (key == "dataset.target_test_labels") {
        c.dataset.target_test_labels = value;
    } else if (key == "train.objective") {
        c.train.objective = parse_objective(value);
    } else if (key == "train.discrepancy") {
        c.train.discrepancy.kind = parse_discrepancy(value);
    } else if (key == "train.clamp") {
        c.train.discrepancy.clamp = parse_double(key, value);
    } else if (key == "train.gamma") {
        c.train.gamma = parse_double(key, value);
    } else if (key == "train.eta") {
        c.train.eta = parse_double(key, value);
    } else if (key == "train.lr") {
        c.train.lr = parse_double(key, value);
    } else if (key == "train.batch_size") {
        c.train.batch_size = parse_int(key, value);
    } else if (key == "train.total_steps") {
        c.train.total_steps = parse_int(key, value);
    } else if (key == "train.inner_g_steps") {
        c.train.inner_g_steps = parse_int(key, value);
    } else if (key == "train.constraint_weight") {
        c.train.constraint_weight = parse_double(key, value);
    } else if (key == "net.extractor_hidden") {
        c.net.extractor_hidden = parse_int_list(key, value);
    } else if (key == "net.head_hidden") {
        c.net.head_hidden = parse_int_list(key, value);
    } else if (key == "net.activation") {
        if (value == "relu")
            c.net.activation = nets::Activation::relu;
        else if (value == "tanh")
            c.net.activation = nets::Activation::tanh;
        else
            throw ConfigError("key net.activation: unknown value '" + value + "'");
    } else if (key == "net.dropout") {
        c.net.dropout = parse_double(key, value);
    } else if (key == "net.batch_norm") {
        c.net.batch_norm = parse_bool(key, value);
    } else if (key == "net.spectral_norm") {
        c.net.spectral_norm = parse_bool(key, value);
    } else if (key == "run.seeds") {
        c.seeds = parse_u64_list(key, value);
    } else if (key == "run.out_dir") {
        c.out_dir = value;
    } else if (key == "bound.thresholds_per_axis") {
        c.bound.thresholds_per_axis = parse_int(key, value);
    } else if (key == "bound.angles") {
        c.bound.angles = parse_int(key, value);
    } else if (key == "bound.offsets_per_angle") {
        c.bound.offsets_per_angle = parse_int(key, value);
    } else if (key == "report.export_data") {
        c.report.export_data = parse_bool(key, value);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        try {
            apply_key(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    try {
        cfg.train.validate();
    } catch (const ContractError& e) {
        throw ConfigError(std::string("invalid training configuration: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "dataset.kind = " << c.dataset.kind << "\n";
    out << "dataset.seed = " << c.dataset.seed << "\n";
    out << "dataset.n_source = " << c.dataset.n_source << "\n";
    out << "dataset.n_target = " << c.dataset.n_target << "\n";
    out << "dataset.rotation_deg = " << format_double(c.dataset.rotation_deg) << "\n";
    out << "dataset.noise_sigma = " << format_double(c.dataset.noise_sigma) << "\n";
    out << "dataset.separation = " << format_double(c.dataset.separation) << "\n";
    out << "dataset.shift = " << format_double(c.dataset.shift) << "\n";
    out << "dataset.flip_fraction = " << format_double(c.dataset.flip_fraction) << "\n";
    if (!c.dataset.source_train_images.empty())
        out << "dataset.source_train_images = " << c.dataset.source_train_images << "\n";
    if (!c.dataset.source_train_labels.empty())
        out << "dataset.source_train_labels = " << c.dataset.source_train_labels << "\n";
    if (!c.dataset.target_train_images.empty())
        out << "dataset.target_train_images = " << c.dataset.target_train_images << "\n";
    if (!c.dataset.target_train_labels.empty())
        out << "dataset.target_train_labels = " << c.dataset.target_train_labels << "\n";
    if (!c.dataset.target_test_images.empty())
        out << "dataset.target_test_images = " << c.dataset.target_test_images << "\n";
    if (!c.dataset.target_test_labels.empty())
        out << "dataset.target_test_labels = " << c.dataset.target_test_labels << "\n";
    out << "train.objective = " << objective_name(c.train.objective) << "\n";
    out << "train.discrepancy = " << discrepancy_name(c.train.discrepancy.kind) << "\n";
    out << "train.clamp = " << format_double(c.train.discrepancy.clamp) << "\n";
    out << "train.gamma = " << format_double(c.train.gamma) << "\n";
    out << "train.eta = " << format_double(c.train.eta) << "\n";
    out << "train.lr = " << format_double(c.train.lr) << "\n";
    out << "train.batch_size = " << c.train.batch_size << "\n";
    out << "train.total_steps = " << c.train.total_steps << "\n";
    out << "train.inner_g_steps = " << c.train.inner_g_steps << "\n";
    out << "train.constraint_weight = " << format_double(c.train.constraint_weight) << "\n";
    out << "net.extractor_hidden = " << int_list_csv(c.net.extractor_hidden) << "\n";
    out << "net.head_hidden = " << int_list_csv(c.net.head_hidden) << "\n";
    out << "net.activation = " << (c.net.activation == nets::Activation::relu ? "relu" : "tanh")
        << "\n";
    out << "net.dropout = " << format_double(c.net.dropout) << "\n";
    out << "net.batch_norm = " << (c.net.batch_norm ? "true" : "false") << "\n";
    out << "net.spectral_norm = " << (c.net.spectral_norm ? "true" : "false") << "\n";
    {
        out << "run.seeds = ";
        for (size_t i = 0; i < c.seeds.size(); ++i) out << (i ? "," : "") << c.seeds[i];
        out << "\n";
    }
    out << "run.out_dir = " << c.out_dir << "\n";
    out << "bound.thresholds_per_axis = " << c.bound.thresholds_per_axis << "\n";
    out << "bound.angles = " << c.bound.angles << "\n";
    out << "bound.offsets_per_angle = " << c.bound.offsets_per_angle << "\n";
    out << "report.export_data = " << (c.report.export_data ? "true" : "false") << "\n";
    return out.str();
}

data::DomainPair build_dataset(const DatasetConfig& ds) {
    if (ds.kind == "twomoons") {
        return data::gen_twomoons_shift(ds.n_source, ds.n_target, ds.rotation_deg,
                                        ds.noise_sigma, ds.seed);
    }
    if (ds.kind == "blobs") {
        return data::gen_mixing_blobs(ds.separation, ds.shift, ds.flip_fraction, ds.seed,
                                      ds.n_source, ds.n_target);
    }
    if (ds.kind == "digits") {
        if (ds.source_train_images.empty() || ds.target_train_images.empty())
            throw DataError("digits dataset: IDX file paths are required");
        data::DigitFiles src{ds.source_train_images, ds.source_train_labels, "", ""};
        data::DigitFiles tgt{ds.target_train_images, ds.target_train_labels,
                             ds.target_test_images, ds.target_test_labels};
        return data::digit_subset_protocol(src, tgt, ds.seed);
    }
    throw ConfigError("unknown dataset kind '" + ds.kind + "'");
}

std::string resolve_out_dir(const std::string& dir) {
    const char* root = std::getenv("JEDA_OUT_ROOT");
    if (!root || !*root) return dir;
    std::filesystem::path p(dir);
    if (p.is_absolute()) return dir;
    return (std::filesystem::path(root) / p).string();
}

}  // namespace jeda::cfg
