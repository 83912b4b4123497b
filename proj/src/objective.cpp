#include "jeda/objective.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace jeda::obj {

using ad::Tensor;
using disc::ScoreBatch;

void Hyperparams::validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw ContractError("hyperparams: gamma must be in [0,1]");
    if (eta < 0.0 || eta > 1.0) throw ContractError("hyperparams: eta must be in [0,1]");
    if (lr < 0.0) throw ContractError("hyperparams: lr must be >= 0");
    if (inner_g_steps < 1) throw ContractError("hyperparams: inner_g_steps must be >= 1");
    if (batch_size < 1) throw ContractError("hyperparams: batch_size must be >= 1");
    if (total_steps < 0) throw ContractError("hyperparams: total_steps must be >= 0");
    if (constraint_weight <= 0.0)
        throw ContractError("hyperparams: constraint_weight must be positive");
    discrepancy.validate();
}

ResolvedObjective resolve_objective(const Hyperparams& hp) {
    ResolvedObjective r;
    r.discrepancy = hp.discrepancy;
    r.gamma = hp.gamma;
    switch (hp.objective) {
        case ObjectiveKind::original:
            break;
        case ObjectiveKind::alternative:
            r.constraint_alternative = true;
            break;
        case ObjectiveKind::mdd:
            r.terms = TermSelect{false, false, true, true};
            r.alias_f2_f1 = true;
            r.use_constraint = false;
            break;
        case ObjectiveKind::mcd:
            r.terms = TermSelect{true, false, false, false};
            r.alias_h_f1 = true;
            r.gamma = 1.0;
            r.discrepancy.kind = disc::Kind::l1;
            break;
        case ObjectiveKind::source_only:
            r.has_adversaries = false;
            r.use_constraint = false;
            break;
    }
    return r;
}

void Adam::apply(const std::vector<ad::Tensor>& params) {
    for (const auto& p : params) {
        ad::Tensor param = p;
        auto g = param.grad();
        auto& st = state_[param.node_id()];
        if (st.m.empty()) {
            st.m.assign(g.size(), 0.0);
            st.v.assign(g.size(), 0.0);
        }
        st.t++;
        double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(st.t));
        double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(st.t));
        auto w = param.values_mut();
        for (size_t i = 0; i < g.size(); ++i) {
            st.m[i] = kBeta1 * st.m[i] + (1.0 - kBeta1) * g[i];
            st.v[i] = kBeta2 * st.v[i] + (1.0 - kBeta2) * g[i] * g[i];
            double mhat = st.m[i] / bc1;
            double vhat = st.v[i] / bc2;
            w[i] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
        }
    }
}

void TrainState::set_mode(nets::Mode m) {
    g->set_mode(m);
    h->set_mode(m);
    if (f1) f1->set_mode(m);
    if (f2) f2->set_mode(m);
}

namespace {

Tensor batch_tensor(const Matrix& m) {
    return Tensor::constant({m.rows, m.cols}, m.data);
}

void check_finite(const Tensor& loss, const char* phase, int step) {
    double v = loss.item();
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "non-finite loss in " << phase << " at step " << step << " (value " << v << ")";
        throw ContractError(msg.str());
    }
}

// Unique parameter list over possibly aliased networks.
std::vector<ad::Tensor> collect_params(std::initializer_list<nets::Network*> nets) {
    std::vector<ad::Tensor> out;
    std::set<int64_t> seen;
    for (nets::Network* n : nets) {
        if (!n) continue;
        for (auto& p : n->params()) {
            if (seen.insert(p.node_id()).second) out.push_back(p);
        }
    }
    return out;
}

void zero_grads(const std::vector<ad::Tensor>& params) {
    for (auto p : params) p.reset_grad();
}

double batch_accuracy(const ScoreBatch& scores, const std::vector<int>& labels) {
    auto pred = disc::induced_label(scores);
    int hits = 0;
    for (size_t i = 0; i < labels.size(); ++i)
        if (pred[i] == labels[i]) hits++;
    return labels.empty() ? 0.0 : static_cast<double>(hits) / labels.size();
}

}  // namespace

AdvValue adversarial_term(const ad::Tensor& g_feats_S, const ad::Tensor& g_feats_T,
                          nets::Network& h, nets::Network& f1, nets::Network& f2,
                          const disc::DiscSpec& kind, const TermSelect& terms,
                          uint64_t dropout_seed) {
    AdvValue out;
    out.hS = disc::make_scores(h.forward(g_feats_S, mix_seed(dropout_seed, 11)));
    out.hT = disc::make_scores(h.forward(g_feats_T, mix_seed(dropout_seed, 12)));
    out.f1S = disc::make_scores(f1.forward(g_feats_S, mix_seed(dropout_seed, 13)));
    out.f1T = disc::make_scores(f1.forward(g_feats_T, mix_seed(dropout_seed, 14)));
    out.f2S = disc::make_scores(f2.forward(g_feats_S, mix_seed(dropout_seed, 15)));
    out.f2T = disc::make_scores(f2.forward(g_feats_T, mix_seed(dropout_seed, 16)));

    Tensor total = Tensor::scalar(0.0);
    if (terms.t_f1f2) {
        Tensor t = disc::pair_measure(kind, out.f1T, out.f2T);
        out.t_f1f2 = t.item();
        total = ad::add(total, t);
    }
    if (terms.s_f1f2) {
        Tensor t = disc::pair_measure(kind, out.f1S, out.f2S);
        out.s_f1f2 = t.item();
        total = ad::add(total, t);
    }
    if (terms.t_hf1) {
        Tensor t = disc::pair_measure(kind, out.hT, out.f1T);
        out.t_hf1 = t.item();
        total = ad::add(total, t);
    }
    if (terms.s_hf2) {
        Tensor t = disc::pair_measure(kind, out.hS, out.f2S);
        out.s_hf2 = t.item();
        total = ad::sub(total, t);
    }
    out.total = total;
    return out;
}

ad::Tensor constraint_loss_original(const ScoreBatch& f1_S, const ScoreBatch& f2_S,
                                    const std::vector<int>& labels_S, double gamma) {
    Tensor loss = disc::nll(f1_S, labels_S);
    if (gamma > 0.0) loss = ad::add(loss, ad::scale(disc::nll(f2_S, labels_S), gamma));
    return loss;
}

ad::Tensor constraint_loss_alternative(const ScoreBatch& f1_S, const ScoreBatch& f2_S,
                                       const std::vector<int>& labels_S,
                                       const ScoreBatch& f2_T,
                                       const std::vector<int>& pseudo_labels_T, double eta) {
    Tensor loss = disc::nll(f1_S, labels_S);
    if (eta > 0.0) loss = ad::add(loss, ad::scale(disc::nll(f2_S, labels_S), eta));
    if (eta < 1.0)
        loss = ad::add(loss, ad::scale(disc::nll(f2_T, pseudo_labels_T), 1.0 - eta));
    return loss;
}

TrainState init_state(const Hyperparams& hp, const NetConfig& nc, int input_dim, int classes) {
    hp.validate();
    TrainState st;
    st.resolved = resolve_objective(hp);
    st.opt = Adam(hp.lr);

    nets::MlpSpec g_spec;
    g_spec.widths.push_back(input_dim);
    for (int w : nc.extractor_hidden) g_spec.widths.push_back(w);
    if (g_spec.widths.size() < 2) g_spec.widths.push_back(input_dim);
    g_spec.activation = nc.activation;
    g_spec.dropout_rate = nc.dropout;
    g_spec.batch_norm = nc.batch_norm;
    g_spec.spectral_norm = false;  // heads only

    // The extractor ends in an activation so features are its last hidden
    // output; nets::Network applies the final affine without activation,
    // so give g one extra identity-sized layer via the head input instead:
    // heads take the extractor's last width.
    int feat_dim = g_spec.widths.back();

    nets::MlpSpec head_spec;
    head_spec.widths.push_back(feat_dim);
    for (int w : nc.head_hidden) head_spec.widths.push_back(w);
    head_spec.widths.push_back(classes);
    head_spec.activation = nc.activation;
    head_spec.dropout_rate = nc.dropout;
    head_spec.batch_norm = nc.batch_norm;
    head_spec.spectral_norm = nc.spectral_norm;

    st.g = std::make_shared<nets::Network>(nets::Network::init(g_spec, mix_seed(hp.seed, 0xa1)));
    st.h = std::make_shared<nets::Network>(nets::Network::init(head_spec, mix_seed(hp.seed, 0xa2)));
    if (st.resolved.has_adversaries) {
        st.f1 = std::make_shared<nets::Network>(
            nets::Network::init(head_spec, mix_seed(hp.seed, 0xa3)));
        st.f2 = st.resolved.alias_f2_f1
                    ? st.f1
                    : std::make_shared<nets::Network>(
                          nets::Network::init(head_spec, mix_seed(hp.seed, 0xa4)));
        if (st.resolved.alias_h_f1) st.h = st.f1;
    }
    return st;
}

void phase_classification(TrainState& st, const Matrix& xs, const std::vector<int>& ys,
                          const Matrix& xt, const Hyperparams& hp, StepMetrics* m) {
    const ResolvedObjective& R = st.resolved;
    uint64_t step_seed = mix_seed(hp.seed, 0x57e9 + static_cast<uint64_t>(st.step));
    st.set_mode(nets::Mode::train);
    Tensor xS = batch_tensor(xs);
    auto all_params = collect_params({st.g.get(), st.h.get(), st.f1.get(), st.f2.get()});

    zero_grads(all_params);
    uint64_t sA = mix_seed(step_seed, 0xA);
    Tensor featS = st.g->forward(xS, mix_seed(sA, 1));
    ScoreBatch hS = disc::make_scores(st.h->forward(featS, mix_seed(sA, 2)));
    Tensor eps_S_h = disc::nll(hS, ys);
    Tensor lossA = eps_S_h;
    if (R.has_adversaries && R.use_constraint) {
        ScoreBatch f1S = disc::make_scores(st.f1->forward(featS, mix_seed(sA, 3)));
        ScoreBatch f2S = disc::make_scores(st.f2->forward(featS, mix_seed(sA, 4)));
        if (m) {
            m->constraint_f1 = disc::nll(f1S, ys).item();
            m->constraint_f2 = disc::nll(f2S, ys).item();
        }
        Tensor constraint;
        if (R.constraint_alternative) {
            Tensor featT = st.g->forward(batch_tensor(xt), mix_seed(sA, 5));
            ScoreBatch hT = disc::make_scores(st.h->forward(featT, mix_seed(sA, 6)));
            std::vector<int> pseudo = disc::induced_label(hT);
            ScoreBatch f2T = disc::make_scores(st.f2->forward(featT, mix_seed(sA, 7)));
            constraint = constraint_loss_alternative(f1S, f2S, ys, f2T, pseudo, hp.eta);
        } else {
            constraint = constraint_loss_original(f1S, f2S, ys, R.gamma);
        }
        lossA = ad::add(lossA, ad::scale(constraint, hp.constraint_weight));
    }
    check_finite(lossA, "phase A", st.step);
    if (m) {
        m->eps_S_h = eps_S_h.item();
        m->src_acc_h = batch_accuracy(hS, ys);
    }
    if (hp.lr > 0.0) {
        ad::backward(lossA);
        // mdd trains its adversary only through the adversarial update
        if (R.has_adversaries && R.use_constraint)
            st.opt.apply(all_params);
        else
            st.opt.apply(collect_params({st.g.get(), st.h.get()}));
    }
}

void phase_adversaries(TrainState& st, const Matrix& xs, const std::vector<int>& ys,
                       const Matrix& xt, const Hyperparams& hp, StepMetrics* m,
                       const std::vector<int>* target_batch_eval_labels) {
    const ResolvedObjective& R = st.resolved;
    if (!R.has_adversaries) return;
    uint64_t step_seed = mix_seed(hp.seed, 0x57e9 + static_cast<uint64_t>(st.step));
    st.set_mode(nets::Mode::train);
    auto all_params = collect_params({st.g.get(), st.h.get(), st.f1.get(), st.f2.get()});

    zero_grads(all_params);
    uint64_t sB = mix_seed(step_seed, 0xB);
    Tensor featS = st.g->forward(batch_tensor(xs), mix_seed(sB, 1));
    Tensor featT = st.g->forward(batch_tensor(xt), mix_seed(sB, 2));
    AdvValue adv =
        adversarial_term(featS, featT, *st.h, *st.f1, *st.f2, R.discrepancy, R.terms, sB);
    Tensor lossB = ad::neg(adv.total);
    if (R.use_constraint) {
        Tensor constraint;
        if (R.constraint_alternative) {
            std::vector<int> pseudo = disc::induced_label(adv.hT);
            constraint =
                constraint_loss_alternative(adv.f1S, adv.f2S, ys, adv.f2T, pseudo, hp.eta);
        } else {
            constraint = constraint_loss_original(adv.f1S, adv.f2S, ys, R.gamma);
        }
        lossB = ad::add(lossB, ad::scale(constraint, hp.constraint_weight));
    }
    check_finite(lossB, "phase B", st.step);
    if (m) {
        m->adv_term = adv.total.item();
        m->eps_T_f1f2 = adv.t_f1f2;
        m->eps_S_f1f2 = adv.s_f1f2;
        m->eps_T_hf1 = adv.t_hf1;
        m->eps_S_hf2 = adv.s_hf2;
        if (target_batch_eval_labels)
            m->tgt_acc_h = batch_accuracy(adv.hT, *target_batch_eval_labels);
    }
    if (hp.lr > 0.0) {
        ad::backward(lossB);
        st.opt.apply(collect_params({st.f1.get(), st.f2.get()}));
    }
}

void phase_extractor(TrainState& st, const Matrix& xs, const Matrix& xt, const Hyperparams& hp) {
    const ResolvedObjective& R = st.resolved;
    if (!R.has_adversaries) return;
    uint64_t step_seed = mix_seed(hp.seed, 0x57e9 + static_cast<uint64_t>(st.step));
    st.set_mode(nets::Mode::train);
    auto all_params = collect_params({st.g.get(), st.h.get(), st.f1.get(), st.f2.get()});

    for (int k = 0; k < hp.inner_g_steps; ++k) {
        zero_grads(all_params);
        uint64_t sC = mix_seed(step_seed, 0xC0 + static_cast<uint64_t>(k));
        Tensor featS = st.g->forward(batch_tensor(xs), mix_seed(sC, 1));
        Tensor featT = st.g->forward(batch_tensor(xt), mix_seed(sC, 2));
        AdvValue adv =
            adversarial_term(featS, featT, *st.h, *st.f1, *st.f2, R.discrepancy, R.terms, sC);
        check_finite(adv.total, "phase C", st.step);
        if (hp.lr > 0.0) {
            ad::backward(adv.total);
            st.opt.apply(collect_params({st.g.get()}));
        }
    }
}

StepMetrics step_minimax(TrainState& st, const Matrix& xs, const std::vector<int>& ys,
                         const Matrix& xt, const Hyperparams& hp,
                         const std::vector<int>* target_batch_eval_labels) {
    if (xs.rows == 0 || xt.rows == 0) throw ContractError("step_minimax: empty batch");
    StepMetrics m;
    m.step = st.step;

    phase_classification(st, xs, ys, xt, hp, &m);
    if (st.resolved.has_adversaries) {
        phase_adversaries(st, xs, ys, xt, hp, &m, target_batch_eval_labels);
        phase_extractor(st, xs, xt, hp);
    } else if (target_batch_eval_labels) {
        // target batch accuracy for the metrics row
        st.set_mode(nets::Mode::train);
        uint64_t step_seed = mix_seed(hp.seed, 0x57e9 + static_cast<uint64_t>(st.step));
        uint64_t sA = mix_seed(step_seed, 0xA);
        Tensor featT = st.g->forward(batch_tensor(xt), mix_seed(sA, 8));
        ScoreBatch hT = disc::make_scores(st.h->forward(featT, mix_seed(sA, 9)));
        m.tgt_acc_h = batch_accuracy(hT, *target_batch_eval_labels);
    }

    st.step++;
    return m;
}

std::vector<int> predict(TrainState& st, const Matrix& x) {
    st.set_mode(nets::Mode::eval);
    std::vector<int> out;
    out.reserve(x.rows);
    const int chunk = 512;
    for (int start = 0; start < x.rows; start += chunk) {
        int n = std::min(chunk, x.rows - start);
        Matrix part(n, x.cols);
        std::copy(x.data.begin() + static_cast<size_t>(start) * x.cols,
                  x.data.begin() + static_cast<size_t>(start + n) * x.cols, part.data.begin());
        Tensor feats = st.g->forward(batch_tensor(part));
        ScoreBatch scores = disc::make_scores(st.h->forward(feats));
        auto labels = disc::induced_label(scores);
        out.insert(out.end(), labels.begin(), labels.end());
    }
    st.set_mode(nets::Mode::train);
    return out;
}

double accuracy(TrainState& st, const Matrix& x, const std::vector<int>& labels) {
    auto pred = predict(st, x);
    if (pred.size() != labels.size()) throw ContractError("accuracy: label count mismatch");
    if (pred.empty()) return 0.0;
    int hits = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == labels[i]) hits++;
    return static_cast<double>(hits) / pred.size();
}

TrainResult train(const Hyperparams& hp, const NetConfig& nc, const data::DomainPair& pair) {
    hp.validate();
    data::TrainView view = data::train_view(pair);
    TrainResult result{init_state(hp, nc, view.source_x.cols, view.classes), {}, 0, 0};
    TrainState& st = result.state;

    auto eval_labels = pair.target_eval_labels.for_evaluation();

    Rng shuffle_rng(mix_seed(hp.seed, 0x5480FF1e));
    std::vector<int> order_s(view.source_x.rows), order_t(view.target_x.rows);
    for (size_t i = 0; i < order_s.size(); ++i) order_s[i] = static_cast<int>(i);
    for (size_t i = 0; i < order_t.size(); ++i) order_t[i] = static_cast<int>(i);
    size_t pos_s = order_s.size(), pos_t = order_t.size();  // trigger initial shuffle

    int bs = std::min(hp.batch_size, std::min(view.source_x.rows, view.target_x.rows));
    Matrix xs(bs, view.source_x.cols), xt(bs, view.target_x.cols);
    std::vector<int> ys(bs), yt_eval(bs);

    for (int step = 0; step < hp.total_steps; ++step) {
        for (int i = 0; i < bs; ++i) {
            if (pos_s + 1 > order_s.size()) {
                shuffle_rng.shuffle(order_s);
                pos_s = 0;
            }
            int row = order_s[pos_s++];
            auto src = view.source_x.row(row);
            std::copy(src.begin(), src.end(), xs.row_mut(i).begin());
            ys[i] = view.source_y[row];
        }
        for (int i = 0; i < bs; ++i) {
            if (pos_t + 1 > order_t.size()) {
                shuffle_rng.shuffle(order_t);
                pos_t = 0;
            }
            int row = order_t[pos_t++];
            auto src = view.target_x.row(row);
            std::copy(src.begin(), src.end(), xt.row_mut(i).begin());
            yt_eval[i] = eval_labels[row];
        }
        result.history.push_back(step_minimax(st, xs, ys, xt, hp, &yt_eval));
    }

    result.final_source_acc = accuracy(st, view.source_x, view.source_y);
    if (pair.eval_split) {
        result.final_target_acc = accuracy(st, pair.eval_split->x, pair.eval_split->labels);
    } else {
        std::vector<int> ty(eval_labels.begin(), eval_labels.end());
        result.final_target_acc = accuracy(st, view.target_x, ty);
    }
    return result;
}

bound::BoundReport empirical_bound_probe(TrainState& st, const data::DomainPair& pair) {
    if (!pair.synthetic())
        throw DataError("empirical_bound_probe: dataset has no known labeling functions");
    auto pred_S = predict(st, pair.source_x);
    auto pred_T = predict(st, pair.target_x);

    // Materialize h over the two finite domains by row lookup.
    bound::Hypothesis h{"trained_h", nullptr};
    const Matrix& sx = pair.source_x;
    const Matrix& tx = pair.target_x;
    h.fn = [&, pred_S, pred_T](std::span<const double> x) -> int {
        for (int i = 0; i < sx.rows; ++i) {
            auto r = sx.row(i);
            if (std::equal(r.begin(), r.end(), x.begin(), x.end())) return pred_S[i];
        }
        for (int i = 0; i < tx.rows; ++i) {
            auto r = tx.row(i);
            if (std::equal(r.begin(), r.end(), x.begin(), x.end())) return pred_T[i];
        }
        throw ContractError("empirical_bound_probe: point not in either domain");
    };
    bound::Hypothesis fS{pair.true_fS->name, pair.true_fS->fn};
    bound::Hypothesis fT{pair.true_fT->name, pair.true_fT->fn};
    return bound::report_for(h, fS, fT, pair.source_x, pair.target_x);
}

}  // namespace jeda::obj
