#pragma once

#include <span>
#include <vector>

#include "jeda/common.hpp"
#include "jeda/tensor.hpp"

// Dissimilarity measurements between hypotheses over a sample batch.
// Every measure is returned as a value for an adversary to MAXIMIZE;
// the trainer negates where it needs to minimize.

namespace jeda::disc {

enum class Form { primitive, dual };

enum class Kind { cmd_primitive, cmd_dual, l1, margin_disparity };

struct DiscSpec {
    Kind kind = Kind::cmd_primitive;
    double clamp = 1e-7;  // numerical floor inside logs; must be <= 1e-4

    void validate() const {
        if (clamp < 0.0 || clamp > 1e-4)
            throw ContractError("discrepancy: clamp must be in [0, 1e-4]");
    }
};

// Softmax outputs of one hypothesis on one batch.
struct ScoreBatch {
    ad::Tensor log_probs;  // [batch x classes]
    ad::Tensor probs;      // exp(log_probs), rows sum to 1
    int batch = 0;
    int classes = 0;
};

// log-softmax the logits and pair with the exponentiated probabilities.
ScoreBatch make_scores(const ad::Tensor& logits);

// Per-row argmax of probs; ties break toward the smaller class index.
std::vector<int> induced_label(const ScoreBatch& scores);
int argmax_row(std::span<const double> row);                 // same tie rule
int argmax_row_excluding(std::span<const double> row, int skip);

// mean over batch of max(0, 1 + max_{y' != y} s(x,y') - s(x,y)),
// with s = log_probs.
ad::Tensor margin_loss(const ScoreBatch& scores, const std::vector<int>& labels);

// Mean negative log-likelihood of the given labels (classification loss).
ad::Tensor nll(const ScoreBatch& scores, const std::vector<int>& labels);

// Cross margin discrepancy for a single pair of probability rows
// (plain doubles; the differentiable path is cmd_batch). Rows are clamped
// to [clamp, 1-clamp] before any log.
double cmd_pointwise(std::span<const double> f1_row, std::span<const double> f2_row,
                     Form form, double clamp);

// Mean of the pointwise cross margin discrepancy over the batch, each row
// routed to its agree/disagree branch; differentiable through both
// hypotheses' probabilities.
ad::Tensor cmd_batch(const ScoreBatch& f1, const ScoreBatch& f2, Form form, double clamp);

// Mean over batch of the mean absolute difference of probability rows.
ad::Tensor l1_discrepancy(const ScoreBatch& f1, const ScoreBatch& f2);

// Margin loss of f under the labels induced by another hypothesis.
ad::Tensor margin_disparity(const ScoreBatch& f, const std::vector<int>& h_labels);

// The pair measure used when assembling training objectives:
//   cmd_*            cmd_batch(a, b)
//   l1               l1_discrepancy(a, b)
//   margin_disparity margin_disparity(b, induced_label(a))
ad::Tensor pair_measure(const DiscSpec& spec, const ScoreBatch& a, const ScoreBatch& b);

}  // namespace jeda::disc
