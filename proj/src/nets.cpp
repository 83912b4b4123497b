#include "jeda/nets.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace jeda::nets {

using ad::Tensor;

void MlpSpec::validate() const {
    if (widths.size() < 2) throw ContractError("mlp spec: need input and output widths");
    for (int w : widths)
        if (w <= 0) throw ContractError("mlp spec: widths must be positive");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ContractError("mlp spec: dropout rate must be in [0, 1)");
}

namespace {

void normalize(std::vector<double>& v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    double n = std::sqrt(n2);
    if (n < 1e-300) return;  // zero vector: leave as-is (zero-matrix case)
    for (double& x : v) x /= n;
}

}  // namespace

ad::Tensor apply_spectral_norm(const ad::Tensor& weight, SnState& state, int iters) {
    const auto& sh = weight.shape();
    if (sh.size() != 2) throw ContractError("spectral norm: weight must be 2-D");
    int m = sh[0], n = sh[1];
    if (state.u.size() != static_cast<size_t>(m)) {
        state.u.assign(m, 1.0 / std::sqrt(static_cast<double>(m)));
        state.v.assign(n, 0.0);
    }
    auto w = weight.values();
    for (int it = 0; it < iters; ++it) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += state.u[i] * w[static_cast<size_t>(i) * n + j];
            state.v[j] = s;
        }
        normalize(state.v);
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += w[static_cast<size_t>(i) * n + j] * state.v[j];
            state.u[i] = s;
        }
        normalize(state.u);
    }
    Tensor u_row = Tensor::constant({1, m}, state.u);
    Tensor v_col = Tensor::constant({n, 1}, state.v);
    Tensor sigma = ad::matmul(ad::matmul(u_row, weight), v_col);  // [1 x 1]
    sigma = ad::clamp(sigma, 1e-12, std::numeric_limits<double>::infinity());
    return ad::div(weight, sigma);
}

Network Network::init(const MlpSpec& spec, uint64_t seed) {
    spec.validate();
    Network net;
    net.spec_ = spec;
    Rng rng(seed);
    int layers = static_cast<int>(spec.widths.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        int fan_in = spec.widths[l];
        int fan_out = spec.widths[l + 1];
        double sd = std::sqrt(2.0 / fan_in);
        std::vector<double> w(static_cast<size_t>(fan_in) * fan_out);
        for (double& x : w) x = rng.normal() * sd;
        net.weights_.push_back(Tensor::parameter({fan_in, fan_out}, std::move(w)));
        net.biases_.push_back(
            Tensor::parameter({fan_out}, std::vector<double>(fan_out, 0.0)));
        if (spec.spectral_norm) {
            SnState st;
            st.u.resize(fan_in);
            for (double& x : st.u) x = rng.normal();
            normalize(st.u);
            st.v.assign(fan_out, 0.0);
            net.sn_.push_back(std::move(st));
        }
    }
    if (spec.batch_norm) {
        for (int l = 0; l < layers - 1; ++l) {
            int width = spec.widths[l + 1];
            BnLayer bn;
            bn.gamma = Tensor::parameter({width}, std::vector<double>(width, 1.0));
            bn.beta = Tensor::parameter({width}, std::vector<double>(width, 0.0));
            bn.running_mean.assign(width, 0.0);
            bn.running_var.assign(width, 1.0);
            net.bn_.push_back(std::move(bn));
        }
    }
    net.rebuild_param_list();
    return net;
}

void Network::rebuild_param_list() {
    params_.clear();
    for (size_t l = 0; l < weights_.size(); ++l) {
        params_.push_back(weights_[l]);
        params_.push_back(biases_[l]);
    }
    for (auto& bn : bn_) {
        params_.push_back(bn.gamma);
        params_.push_back(bn.beta);
    }
}

ad::Tensor Network::forward(const ad::Tensor& x, uint64_t dropout_seed) {
    if (x.shape().size() != 2 || x.shape()[1] != input_width())
        throw ContractError("network forward: input width mismatch");
    bool training = mode_ == Mode::train;
    int layers = layer_count();
    Tensor h = x;
    for (int l = 0; l < layers; ++l) {
        Tensor w = weights_[l];
        if (spec_.spectral_norm) w = apply_spectral_norm(w, sn_[l], training ? 1 : 0);
        h = ad::add(ad::matmul(h, w), biases_[l]);
        if (l == layers - 1) break;  // output layer: affine only

        if (spec_.batch_norm) {
            BnLayer& bn = bn_[l];
            int width = spec_.widths[l + 1];
            if (training) {
                Tensor mu = ad::mean_rows(h);
                Tensor xc = ad::sub(h, mu);
                Tensor var = ad::mean_rows(ad::mul(xc, xc));
                Tensor denom = ad::sqrt(ad::add_scalar(var, kBnEpsilon));
                h = ad::add(ad::mul(ad::div(xc, denom), bn.gamma), bn.beta);
                auto mv = mu.values();
                auto vv = var.values();
                for (int j = 0; j < width; ++j) {
                    bn.running_mean[j] = kBnMomentum * bn.running_mean[j] + (1 - kBnMomentum) * mv[j];
                    bn.running_var[j] = kBnMomentum * bn.running_var[j] + (1 - kBnMomentum) * vv[j];
                }
                bn.updates++;
            } else {
                std::vector<double> scale(width), shift(width);
                for (int j = 0; j < width; ++j)
                    scale[j] = 1.0 / std::sqrt(bn.running_var[j] + kBnEpsilon);
                Tensor rm = Tensor::constant({width}, bn.running_mean);
                Tensor sc = Tensor::constant({width}, scale);
                h = ad::add(ad::mul(ad::mul(ad::sub(h, rm), sc), bn.gamma), bn.beta);
            }
        }

        h = spec_.activation == Activation::relu ? ad::relu(h) : ad::tanh(h);

        if (training && spec_.dropout_rate > 0.0) {
            Rng rng(mix_seed(dropout_seed, static_cast<uint64_t>(l) + 0x5eedULL));
            double keep = 1.0 - spec_.dropout_rate;
            std::vector<double> mask(static_cast<size_t>(h.size()));
            for (double& mv : mask) mv = rng.uniform() < keep ? 1.0 / keep : 0.0;
            h = ad::mul(h, Tensor::constant(h.shape(), std::move(mask)));
        }
    }
    return h;
}

// --- checkpoint text format ---
//
// net <name>
// spec <w0,w1,...> <relu|tanh> <dropout hex> <sn 0|1> <bn 0|1>
// tensor <rows> <cols-or-0> <hex values...>      (repeated: w0 b0 w1 b1 ...)
// bn <mean...> | <var...> | <updates>
// sn <u...> | <v...>
// end

namespace {

std::string hex(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

void write_values(std::ostream& out, std::span<const double> v) {
    for (size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << hex(v[i]);
}

std::vector<double> read_values(std::istringstream& in, size_t n, const char* what) {
    std::vector<double> v(n);
    std::string tok;
    for (size_t i = 0; i < n; ++i) {
        if (!(in >> tok)) throw DataError(std::string("checkpoint: truncated ") + what);
        v[i] = std::strtod(tok.c_str(), nullptr);
    }
    return v;
}

}  // namespace

void Network::save(std::ostream& out, const std::string& name) const {
    out << "net " << name << "\n";
    out << "spec ";
    for (size_t i = 0; i < spec_.widths.size(); ++i)
        out << (i ? "," : "") << spec_.widths[i];
    out << " " << (spec_.activation == Activation::relu ? "relu" : "tanh") << " "
        << hex(spec_.dropout_rate) << " " << (spec_.spectral_norm ? 1 : 0) << " "
        << (spec_.batch_norm ? 1 : 0) << "\n";
    for (size_t l = 0; l < weights_.size(); ++l) {
        out << "tensor " << spec_.widths[l] << " " << spec_.widths[l + 1] << " ";
        write_values(out, weights_[l].values());
        out << "\n";
        out << "tensor " << spec_.widths[l + 1] << " 0 ";
        write_values(out, biases_[l].values());
        out << "\n";
    }
    for (const auto& bn : bn_) {
        out << "bn ";
        write_values(out, bn.gamma.values());
        out << " | ";
        write_values(out, bn.beta.values());
        out << " | ";
        write_values(out, bn.running_mean);
        out << " | ";
        write_values(out, bn.running_var);
        out << " | " << bn.updates << "\n";
    }
    for (const auto& sn : sn_) {
        out << "sn ";
        write_values(out, sn.u);
        out << " | ";
        write_values(out, sn.v);
        out << "\n";
    }
    out << "end\n";
}

Network Network::load(std::istream& in, std::string* name) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("net ", 0) != 0)
        throw DataError("checkpoint: expected 'net <name>' line");
    if (name) *name = line.substr(4);

    if (!std::getline(in, line) || line.rfind("spec ", 0) != 0)
        throw DataError("checkpoint: expected 'spec' line");
    std::istringstream spec_in(line.substr(5));
    std::string widths_csv, act, dropout_hex;
    int sn_flag = 0, bn_flag = 0;
    if (!(spec_in >> widths_csv >> act >> dropout_hex >> sn_flag >> bn_flag))
        throw DataError("checkpoint: malformed spec line");
    MlpSpec spec;
    {
        std::istringstream ws(widths_csv);
        std::string tok;
        while (std::getline(ws, tok, ',')) spec.widths.push_back(std::stoi(tok));
    }
    spec.activation = act == "relu" ? Activation::relu : Activation::tanh;
    spec.dropout_rate = std::strtod(dropout_hex.c_str(), nullptr);
    spec.spectral_norm = sn_flag != 0;
    spec.batch_norm = bn_flag != 0;
    spec.validate();

    Network net;
    net.spec_ = spec;
    int layers = static_cast<int>(spec.widths.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        for (int which = 0; which < 2; ++which) {
            if (!std::getline(in, line) || line.rfind("tensor ", 0) != 0)
                throw DataError("checkpoint: expected tensor line");
            std::istringstream ts(line.substr(7));
            int r = 0, c = 0;
            ts >> r >> c;
            size_t count = c == 0 ? static_cast<size_t>(r) : static_cast<size_t>(r) * c;
            auto vals = read_values(ts, count, "tensor");
            if (which == 0)
                net.weights_.push_back(Tensor::parameter({r, c}, std::move(vals)));
            else
                net.biases_.push_back(Tensor::parameter({r}, std::move(vals)));
        }
    }
    if (spec.batch_norm) {
        for (int l = 0; l < layers - 1; ++l) {
            if (!std::getline(in, line) || line.rfind("bn ", 0) != 0)
                throw DataError("checkpoint: expected bn line");
            std::string body = line.substr(3);
            for (char& ch : body)
                if (ch == '|') ch = ' ';
            std::istringstream bs(body);
            int width = spec.widths[l + 1];
            BnLayer bn;
            bn.gamma = Tensor::parameter({width}, read_values(bs, width, "bn gamma"));
            bn.beta = Tensor::parameter({width}, read_values(bs, width, "bn beta"));
            bn.running_mean = read_values(bs, width, "bn mean");
            bn.running_var = read_values(bs, width, "bn var");
            if (!(bs >> bn.updates)) throw DataError("checkpoint: truncated bn line");
            net.bn_.push_back(std::move(bn));
        }
    }
    if (spec.spectral_norm) {
        for (int l = 0; l < layers; ++l) {
            if (!std::getline(in, line) || line.rfind("sn ", 0) != 0)
                throw DataError("checkpoint: expected sn line");
            std::string body = line.substr(3);
            for (char& ch : body)
                if (ch == '|') ch = ' ';
            std::istringstream ss(body);
            SnState st;
            st.u = read_values(ss, spec.widths[l], "sn u");
            st.v = read_values(ss, spec.widths[l + 1], "sn v");
            net.sn_.push_back(std::move(st));
        }
    }
    if (!std::getline(in, line) || line != "end")
        throw DataError("checkpoint: expected 'end'");
    net.rebuild_param_list();
    return net;
}

}  // namespace jeda::nets
