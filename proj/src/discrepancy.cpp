#include "jeda/discrepancy.hpp"

#include <cmath>

namespace jeda::disc {

using ad::Tensor;

ScoreBatch make_scores(const ad::Tensor& logits) {
    const auto& sh = logits.shape();
    if (sh.size() != 2) throw ContractError("make_scores: expected [batch x classes]");
    ScoreBatch sb;
    sb.log_probs = ad::log_softmax(logits);
    sb.probs = ad::exp(sb.log_probs);
    sb.batch = sh[0];
    sb.classes = sh[1];
    return sb;
}

int argmax_row(std::span<const double> row) {
    int best = 0;
    for (int j = 1; j < static_cast<int>(row.size()); ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

int argmax_row_excluding(std::span<const double> row, int skip) {
    int best = -1;
    for (int j = 0; j < static_cast<int>(row.size()); ++j) {
        if (j == skip) continue;
        if (best < 0 || row[j] > row[best]) best = j;
    }
    return best;
}

std::vector<int> induced_label(const ScoreBatch& scores) {
    std::vector<int> out(scores.batch);
    auto pv = scores.probs.values();
    for (int i = 0; i < scores.batch; ++i)
        out[i] = argmax_row(pv.subspan(static_cast<size_t>(i) * scores.classes, scores.classes));
    return out;
}

namespace {

void check_labels(const std::vector<int>& labels, int batch, int classes, const char* what) {
    if (static_cast<int>(labels.size()) != batch)
        throw ContractError(std::string(what) + ": label count does not match batch");
    for (int y : labels)
        if (y < 0 || y >= classes) throw ContractError(std::string(what) + ": label out of range");
}

}  // namespace

ad::Tensor margin_loss(const ScoreBatch& scores, const std::vector<int>& labels) {
    check_labels(labels, scores.batch, scores.classes, "margin_loss");
    if (scores.classes < 2) throw ContractError("margin_loss: need at least two classes");
    auto sv = scores.log_probs.values();
    std::vector<int> rival(scores.batch);
    for (int i = 0; i < scores.batch; ++i) {
        auto row = sv.subspan(static_cast<size_t>(i) * scores.classes, scores.classes);
        rival[i] = argmax_row_excluding(row, labels[i]);
    }
    Tensor own = ad::gather_cols(scores.log_probs, labels);
    Tensor other = ad::gather_cols(scores.log_probs, rival);
    return ad::mean(ad::relu(ad::add_scalar(ad::sub(other, own), 1.0)));
}

ad::Tensor nll(const ScoreBatch& scores, const std::vector<int>& labels) {
    check_labels(labels, scores.batch, scores.classes, "nll");
    return ad::neg(ad::mean(ad::gather_cols(scores.log_probs, labels)));
}

double cmd_pointwise(std::span<const double> f1_row, std::span<const double> f2_row,
                     Form form, double clamp) {
    if (f1_row.size() != f2_row.size())
        throw ContractError("cmd_pointwise: rows must have the same length");
    auto cl = [clamp](double p) {
        double hi = 1.0 - clamp;
        return p < clamp ? clamp : (p > hi ? hi : p);
    };
    int y1 = argmax_row(f1_row);
    int y2 = argmax_row(f2_row);
    if (y1 != y2) {
        double p1y1 = cl(f1_row[y1]), p1y2 = cl(f1_row[y2]);
        double p2y1 = cl(f2_row[y1]), p2y2 = cl(f2_row[y2]);
        if (form == Form::primitive)
            return std::log(p1y1) - std::log(p1y2) + std::log(p2y2) - std::log(p2y1);
        return std::log(p1y1) + std::log(1.0 - p1y2) + std::log(p2y2) + std::log(1.0 - p2y1);
    }
    double a = cl(f1_row[y1]), b = cl(f2_row[y1]);
    double mx = a >= b ? a : b;
    double mn = a <= b ? a : b;
    if (form == Form::primitive) return std::log(mx) - std::log(mn);
    double cmx = (1.0 - a) >= (1.0 - b) ? (1.0 - a) : (1.0 - b);
    return std::log(mx) + std::log(cmx);
}

ad::Tensor cmd_batch(const ScoreBatch& f1, const ScoreBatch& f2, Form form, double clamp) {
    if (f1.batch != f2.batch || f1.classes != f2.classes)
        throw ContractError("cmd_batch: batch shapes disagree");
    int b = f1.batch;

    std::vector<int> y1 = induced_label(f1);
    std::vector<int> y2 = induced_label(f2);
    std::vector<double> agree(b);
    for (int i = 0; i < b; ++i) agree[i] = y1[i] == y2[i] ? 1.0 : 0.0;

    Tensor p1 = ad::clamp(f1.probs, clamp, 1.0 - clamp);
    Tensor p2 = ad::clamp(f2.probs, clamp, 1.0 - clamp);
    Tensor p1y1 = ad::gather_cols(p1, y1);
    Tensor p1y2 = ad::gather_cols(p1, y2);
    Tensor p2y1 = ad::gather_cols(p2, y1);
    Tensor p2y2 = ad::gather_cols(p2, y2);

    Tensor disagree_val, agree_val;
    if (form == Form::primitive) {
        disagree_val = ad::add(ad::sub(ad::log(p1y1), ad::log(p1y2)),
                               ad::sub(ad::log(p2y2), ad::log(p2y1)));
        // y1 == y2 on agree rows, so p1y1/p2y1 are the shared class.
        agree_val = ad::sub(ad::log(ad::max_pair(p1y1, p2y1)),
                            ad::log(ad::min_pair(p1y1, p2y1)));
    } else {
        Tensor one = Tensor::constant({b}, std::vector<double>(b, 1.0));
        disagree_val = ad::add(ad::add(ad::log(p1y1), ad::log(ad::sub(one, p1y2))),
                               ad::add(ad::log(p2y2), ad::log(ad::sub(one, p2y1))));
        agree_val = ad::add(ad::log(ad::max_pair(p1y1, p2y1)),
                            ad::log(ad::max_pair(ad::sub(one, p1y1), ad::sub(one, p2y1))));
    }
    Tensor mask = Tensor::constant({b}, agree);
    std::vector<double> inv(b);
    for (int i = 0; i < b; ++i) inv[i] = 1.0 - agree[i];
    Tensor inv_mask = Tensor::constant({b}, inv);
    Tensor per_row = ad::add(ad::mul(mask, agree_val), ad::mul(inv_mask, disagree_val));
    return ad::mean(per_row);
}

ad::Tensor l1_discrepancy(const ScoreBatch& f1, const ScoreBatch& f2) {
    if (f1.batch != f2.batch || f1.classes != f2.classes)
        throw ContractError("l1_discrepancy: batch shapes disagree");
    return ad::mean(ad::abs(ad::sub(f1.probs, f2.probs)));
}

ad::Tensor margin_disparity(const ScoreBatch& f, const std::vector<int>& h_labels) {
    return margin_loss(f, h_labels);
}

ad::Tensor pair_measure(const DiscSpec& spec, const ScoreBatch& a, const ScoreBatch& b) {
    spec.validate();
    switch (spec.kind) {
        case Kind::cmd_primitive:
            return cmd_batch(a, b, Form::primitive, spec.clamp);
        case Kind::cmd_dual:
            return cmd_batch(a, b, Form::dual, spec.clamp);
        case Kind::l1:
            return l1_discrepancy(a, b);
        case Kind::margin_disparity:
            return margin_disparity(b, induced_label(a));
    }
    throw ContractError("pair_measure: unknown kind");
}

}  // namespace jeda::disc
