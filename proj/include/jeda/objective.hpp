#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "jeda/bound_oracle.hpp"
#include "jeda/common.hpp"
#include "jeda/data.hpp"
#include "jeda/discrepancy.hpp"
#include "jeda/nets.hpp"
#include "jeda/tensor.hpp"

// Constrained minimax training objectives and the alternating
// optimization that drives them, plus the baseline configurations they
// degrade to.

namespace jeda::obj {

enum class ObjectiveKind { original, alternative, mdd, mcd, source_only };

struct NetConfig {
    std::vector<int> extractor_hidden = {64, 64};
    std::vector<int> head_hidden = {64};
    nets::Activation activation = nets::Activation::relu;
    double dropout = 0.0;
    bool batch_norm = false;
    bool spectral_norm = true;  // classifier heads only
};

struct Hyperparams {
    ObjectiveKind objective = ObjectiveKind::original;
    disc::DiscSpec discrepancy{};
    double gamma = 1.0;  // weight on eps_S(f2) in the original constraint
    double eta = 0.9;    // source/pseudo-target mix in the alternative constraint
    double lr = 1e-4;
    int inner_g_steps = 4;
    int batch_size = 128;
    int total_steps = 2000;
    double constraint_weight = 1.0;
    uint64_t seed = 1;

    void validate() const;
};

// Which of the four adversarial terms participate. The full objective
// uses all of them; the baselines select subsets.
struct TermSelect {
    bool t_f1f2 = true;
    bool s_f1f2 = true;
    bool t_hf1 = true;
    bool s_hf2 = true;
};

// How an ObjectiveKind maps onto networks, terms, and constraint form.
struct ResolvedObjective {
    TermSelect terms;
    bool has_adversaries = true;
    bool use_constraint = true;
    bool constraint_alternative = false;
    bool alias_h_f1 = false;  // mcd: one network serves as both h and f1
    bool alias_f2_f1 = false;  // mdd: single adversary
    disc::DiscSpec discrepancy;
    double gamma = 1.0;
};

// Applies the baseline configurations: mdd keeps only the two h-terms
// with a single adversary and no constraint; mcd keeps the target
// f1/f2 term with the L1 measure, gamma = 1 and h aliased to f1.
ResolvedObjective resolve_objective(const Hyperparams& hp);

class Adam {
  public:
    explicit Adam(double lr) : lr_(lr) {}
    void apply(const std::vector<ad::Tensor>& params);
    double lr() const { return lr_; }

  private:
    struct Moments {
        std::vector<double> m, v;
        long long t = 0;
    };
    std::unordered_map<int64_t, Moments> state_;
    double lr_;
    static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
};

struct StepMetrics {
    int step = 0;
    double eps_S_h = 0;
    double constraint_f1 = 0, constraint_f2 = 0;
    double adv_term = 0;
    double eps_T_f1f2 = 0, eps_S_f1f2 = 0, eps_T_hf1 = 0, eps_S_hf2 = 0;
    double src_acc_h = 0, tgt_acc_h = 0;  // on the step's mini-batches
};

struct TrainState {
    std::shared_ptr<nets::Network> g, h, f1, f2;  // f1/f2 null for source_only
    ResolvedObjective resolved;
    Adam opt{1e-4};
    int step = 0;

    void set_mode(nets::Mode m);
};

struct AdvValue {
    ad::Tensor total;
    double t_f1f2 = 0, s_f1f2 = 0, t_hf1 = 0, s_hf2 = 0;
    // Score batches from this forward, reusable for the constraint.
    disc::ScoreBatch hS, hT, f1S, f1T, f2S, f2T;
};

// eps_T(f1,f2) + eps_S(f1,f2) + eps_T(h,f1) - eps_S(h,f2), each term
// measured by the configured discrepancy on the respective feature batch.
AdvValue adversarial_term(const ad::Tensor& g_feats_S, const ad::Tensor& g_feats_T,
                          nets::Network& h, nets::Network& f1, nets::Network& f2,
                          const disc::DiscSpec& kind, const TermSelect& terms = {},
                          uint64_t dropout_seed = 0);

// NLL(f1 on S) + gamma * NLL(f2 on S).
ad::Tensor constraint_loss_original(const disc::ScoreBatch& f1_S, const disc::ScoreBatch& f2_S,
                                    const std::vector<int>& labels_S, double gamma);

// NLL(f1 on S) + eta * NLL(f2 on S) + (1-eta) * NLL(f2 on pseudo-labeled T).
// Pseudo labels are constants; no gradient reaches h through them.
ad::Tensor constraint_loss_alternative(const disc::ScoreBatch& f1_S, const disc::ScoreBatch& f2_S,
                                       const std::vector<int>& labels_S,
                                       const disc::ScoreBatch& f2_T,
                                       const std::vector<int>& pseudo_labels_T, double eta);

TrainState init_state(const Hyperparams& hp, const NetConfig& nc, int input_dim, int classes);

// The three phases of one alternating step, exposed individually so the
// freeze contracts can be verified: after phase_adversaries g is
// untouched bit-for-bit, after phase_extractor the heads are.
void phase_classification(TrainState& state, const Matrix& xs, const std::vector<int>& ys,
                          const Matrix& xt, const Hyperparams& hp, StepMetrics* metrics);
void phase_adversaries(TrainState& state, const Matrix& xs, const std::vector<int>& ys,
                       const Matrix& xt, const Hyperparams& hp, StepMetrics* metrics,
                       const std::vector<int>* target_batch_eval_labels);
void phase_extractor(TrainState& state, const Matrix& xs, const Matrix& xt,
                     const Hyperparams& hp);

// One alternating step: (A) everyone minimizes classification + weighted
// constraint; (B) f1, f2 maximize the adversarial term minus the weighted
// constraint with g frozen; (C) g minimizes the adversarial term for
// inner_g_steps with the heads frozen. Aborts on non-finite losses.
StepMetrics step_minimax(TrainState& state, const Matrix& xs, const std::vector<int>& ys,
                         const Matrix& xt, const Hyperparams& hp,
                         const std::vector<int>* target_batch_eval_labels = nullptr);

std::vector<int> predict(TrainState& state, const Matrix& x);  // h(g(x)), eval mode
double accuracy(TrainState& state, const Matrix& x, const std::vector<int>& labels);

struct TrainResult {
    TrainState state;
    std::vector<StepMetrics> history;
    double final_target_acc = 0;
    double final_source_acc = 0;
};

TrainResult train(const Hyperparams& hp, const NetConfig& nc, const data::DomainPair& pair);

// Evaluates the trained h against the pair's known labeling functions
// with 0-1 loss. Requires a synthetic pair.
bound::BoundReport empirical_bound_probe(TrainState& state, const data::DomainPair& pair);

}  // namespace jeda::obj
