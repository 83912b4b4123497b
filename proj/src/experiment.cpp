#include "jeda/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace jeda::experiment {

namespace fs = std::filesystem;

static const char* kMetricsSchema = "# schema: jeda.metrics.v1";
static const char* kMetricsHeader =
    "step,eps_S_h,constraint_f1,constraint_f2,adv_term,eps_T_f1f2,eps_S_f1f2,"
    "eps_T_hf1,eps_S_hf2,src_acc_h,tgt_acc_h";

void write_metrics_csv(const std::vector<obj::StepMetrics>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << kMetricsSchema << "\n" << kMetricsHeader << "\n";
    for (const auto& m : history) {
        out << m.step << ',' << format_double(m.eps_S_h) << ',' << format_double(m.constraint_f1)
            << ',' << format_double(m.constraint_f2) << ',' << format_double(m.adv_term) << ','
            << format_double(m.eps_T_f1f2) << ',' << format_double(m.eps_S_f1f2) << ','
            << format_double(m.eps_T_hf1) << ',' << format_double(m.eps_S_hf2) << ','
            << format_double(m.src_acc_h) << ',' << format_double(m.tgt_acc_h) << "\n";
    }
}

std::vector<obj::StepMetrics> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open metrics file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kMetricsSchema)
        throw DataError("metrics csv: unexpected schema line in " + path);
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw DataError("metrics csv: column mismatch in " + path);
    std::vector<obj::StepMetrics> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        obj::StepMetrics m;
        std::istringstream row(line);
        std::string tok;
        double* fields[] = {nullptr,          &m.eps_S_h,    &m.constraint_f1, &m.constraint_f2,
                            &m.adv_term,      &m.eps_T_f1f2, &m.eps_S_f1f2,    &m.eps_T_hf1,
                            &m.eps_S_hf2,     &m.src_acc_h,  &m.tgt_acc_h};
        for (int i = 0; i < 11; ++i) {
            if (!std::getline(row, tok, ','))
                throw DataError("metrics csv: short row in " + path);
            if (i == 0)
                m.step = std::stoi(tok);
            else
                *fields[i] = std::strtod(tok.c_str(), nullptr);
        }
        out.push_back(m);
    }
    return out;
}

void save_checkpoint(const obj::TrainState& state, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    int count = 2 + (state.f1 ? 1 : 0) + (state.f2 ? 1 : 0);
    out << "jeda-checkpoint v1\n";
    out << "nets " << count << "\n";
    state.g->save(out, "g");
    state.h->save(out, "h");
    if (state.f1) state.f1->save(out, "f1");
    if (state.f2) state.f2->save(out, "f2");
}

obj::TrainState load_checkpoint(const std::string& path, const obj::Hyperparams& hp) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "jeda-checkpoint v1")
        throw DataError("checkpoint: bad header in " + path);
    if (!std::getline(in, line) || line.rfind("nets ", 0) != 0)
        throw DataError("checkpoint: missing net count in " + path);
    int count = std::stoi(line.substr(5));

    obj::TrainState st;
    st.resolved = obj::resolve_objective(hp);
    st.opt = obj::Adam(hp.lr);
    for (int i = 0; i < count; ++i) {
        std::string name;
        auto net = std::make_shared<nets::Network>(nets::Network::load(in, &name));
        if (name == "g")
            st.g = net;
        else if (name == "h")
            st.h = net;
        else if (name == "f1")
            st.f1 = net;
        else if (name == "f2")
            st.f2 = net;
        else
            throw DataError("checkpoint: unknown net name '" + name + "'");
    }
    if (!st.g || !st.h) throw DataError("checkpoint: g and h are required");
    if (st.resolved.alias_f2_f1 && st.f1) st.f2 = st.f1;
    if (st.resolved.alias_h_f1 && st.f1) st.h = st.f1;
    return st;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw ContractError("quantile: empty sample");
    std::sort(v.begin(), v.end());
    double pos = q * (static_cast<double>(v.size()) - 1.0);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

TrainOutcome run_train(const cfg::ExperimentConfig& config, const std::string& out_dir_override) {
    TrainOutcome outcome;
    outcome.out_dir = cfg::resolve_out_dir(
        out_dir_override.empty() ? config.out_dir : out_dir_override);
    fs::create_directories(outcome.out_dir);

    {
        std::ofstream echo(fs::path(outcome.out_dir) / "config.echo");
        if (!echo) throw DataError("cannot write config.echo in " + outcome.out_dir);
        echo << cfg::serialize_config(config);
    }

    data::DomainPair pair = cfg::build_dataset(config.dataset);
    if (config.report.export_data)
        data::export_csv(pair, (fs::path(outcome.out_dir) / "dataset.csv").string());

    for (uint64_t seed : config.seeds) {
        obj::Hyperparams hp = config.train;
        hp.seed = seed;
        obj::TrainResult res = obj::train(hp, config.net, pair);

        fs::path seed_dir = fs::path(outcome.out_dir) / ("seed_" + std::to_string(seed));
        fs::create_directories(seed_dir);
        write_metrics_csv(res.history, (seed_dir / "metrics.csv").string());
        save_checkpoint(res.state, (seed_dir / "checkpoint.txt").string());
        outcome.target_accs.push_back(res.final_target_acc);
        outcome.source_accs.push_back(res.final_source_acc);
    }

    outcome.median_target_acc = median(outcome.target_accs);
    outcome.iqr_low = quantile(outcome.target_accs, 0.25);
    outcome.iqr_high = quantile(outcome.target_accs, 0.75);

    {
        std::ofstream sum(fs::path(outcome.out_dir) / "summary.txt");
        sum << "jeda train summary\n";
        sum << "dataset: " << pair.meta.generator << " (" << pair.meta.params << ", seed "
            << pair.meta.seed << ")\n";
        sum << "seeds:";
        for (uint64_t s : config.seeds) sum << " " << s;
        sum << "\n";
        sum << "final target accuracy per seed:";
        for (double a : outcome.target_accs) sum << " " << format_double(a);
        sum << "\n";
        sum << "final source accuracy per seed:";
        for (double a : outcome.source_accs) sum << " " << format_double(a);
        sum << "\n";
        sum << "median target accuracy: " << format_double(outcome.median_target_acc) << "\n";
        sum << "target accuracy IQR: [" << format_double(outcome.iqr_low) << ", "
            << format_double(outcome.iqr_high) << "]\n";
    }
    return outcome;
}

BoundOutcome run_verify_bound(const cfg::ExperimentConfig& config,
                              const std::string& out_dir_override) {
    BoundOutcome outcome;
    outcome.out_dir = cfg::resolve_out_dir(
        out_dir_override.empty() ? config.out_dir : out_dir_override);
    fs::create_directories(outcome.out_dir);

    data::DomainPair pair = cfg::build_dataset(config.dataset);
    if (!pair.synthetic())
        throw DataError("verify-bound needs a synthetic dataset with known labeling functions");

    {
        std::ofstream echo(fs::path(outcome.out_dir) / "config.echo");
        echo << cfg::serialize_config(config);
    }

    bound::Hypothesis fS{pair.true_fS->name, pair.true_fS->fn};
    bound::Hypothesis fT{pair.true_fT->name, pair.true_fT->fn};
    bound::HypothesisGrid grid =
        bound::build_grid(pair.source_x, pair.target_x, fS, fT, config.bound.thresholds_per_axis,
                          config.bound.angles, config.bound.offsets_per_angle);
    outcome.result = bound::verify_bound_chain(grid, fS, fT, pair.source_x, pair.target_x);

    bound::write_reports_csv(outcome.result, (fs::path(outcome.out_dir) / "bound.csv").string());
    {
        std::ofstream sum(fs::path(outcome.out_dir) / "bound_summary.txt");
        sum << bound::summary_text(outcome.result);
    }
    return outcome;
}

}  // namespace jeda::experiment
