#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "jeda/common.hpp"
#include "jeda/tensor.hpp"

namespace jeda::nets {

enum class Activation { relu, tanh };
enum class Mode { train, eval };

struct MlpSpec {
    std::vector<int> widths;  // [d_in, hidden..., d_out]
    Activation activation = Activation::relu;
    double dropout_rate = 0.0;  // applied after hidden activations, train mode only
    bool spectral_norm = false;
    bool batch_norm = false;

    void validate() const;
};

// Persistent power-iteration vectors for one weight matrix.
struct SnState {
    std::vector<double> u, v;
};

struct BnLayer {
    ad::Tensor gamma, beta;
    std::vector<double> running_mean, running_var;
    long long updates = 0;
};

inline constexpr double kBnMomentum = 0.9;
inline constexpr double kBnEpsilon = 1e-5;

// weight / sigma_hat. Runs `iters` power-iteration updates on `state` in
// place, then builds sigma_hat = u^T W v into the graph with u, v as
// constants so the gradient flows through W. iters == 0 reuses the stored
// vectors without updating. sigma_hat is clamped below at 1e-12, which
// leaves an all-zero weight unchanged.
ad::Tensor apply_spectral_norm(const ad::Tensor& weight, SnState& state, int iters);

class Network {
  public:
    Network() = default;

    // He-scaled weights (std sqrt(2/fan_in)), zero biases, reproducible
    // from the seed.
    static Network init(const MlpSpec& spec, uint64_t seed);

    // Per hidden layer: affine -> (batch norm) -> activation -> (dropout);
    // final layer affine only. Returns logits. dropout_seed is consumed
    // only in train mode with a nonzero dropout rate.
    ad::Tensor forward(const ad::Tensor& x, uint64_t dropout_seed = 0);

    void set_mode(Mode m) { mode_ = m; }
    Mode mode() const { return mode_; }
    int input_width() const { return spec_.widths.front(); }
    int output_width() const { return spec_.widths.back(); }
    const MlpSpec& spec() const { return spec_; }

    // Weights, biases, then batch-norm scale/shift, in layer order.
    std::vector<ad::Tensor>& params() { return params_; }
    const std::vector<ad::Tensor>& params() const { return params_; }
    ad::Tensor& weight(int layer) { return weights_[layer]; }
    ad::Tensor& bias(int layer) { return biases_[layer]; }
    int layer_count() const { return static_cast<int>(weights_.size()); }
    SnState& sn_state(int layer) { return sn_[layer]; }
    BnLayer& bn_layer(int hidden_index) { return bn_[hidden_index]; }

    void save(std::ostream& out, const std::string& name) const;
    static Network load(std::istream& in, std::string* name = nullptr);

  private:
    MlpSpec spec_;
    std::vector<ad::Tensor> weights_, biases_;
    std::vector<ad::Tensor> params_;
    std::vector<SnState> sn_;   // per layer when spectral_norm
    std::vector<BnLayer> bn_;   // per hidden layer when batch_norm
    Mode mode_ = Mode::train;

    void rebuild_param_list();
};

}  // namespace jeda::nets
