#pragma once

#include <vector>

#include "mvsgnn/dataset.hpp"
#include "mvsgnn/dense.hpp"
#include "mvsgnn/history.hpp"
#include "mvsgnn/model.hpp"
#include "mvsgnn/plan.hpp"

namespace mvsgnn {

// Everything the backward pass and the per-sample gradient trick need from
// one forward pass. w_input[l-1] is the matrix actually multiplied into
// W^(l): the aggregate for plain aggregation, [self | aggregate] for concat.
struct ForwardTape {
    std::vector<DenseMatrix> h;        // h[l] over node_sets[l]; h[0] = input rows
    std::vector<DenseMatrix> z;        // z[l-1] = pre-activation of layer l
    std::vector<DenseMatrix> w_input;  // w_input[l-1], saved for backward reuse
    std::vector<Index> batch_nodes;
    std::vector<double> inclusion_probs;

    const DenseMatrix& logits() const { return z.back(); }
};

// Runs the plan:  Z(l) = agg(l) W(l),  H(l) = relu(Z(l)),  where agg is
// fresh*H(l-1) plus the stale product against history when the plan has
// stale parts (history must then be supplied). The final layer's loss acts
// on Z(L); relu(Z(L)) is still recorded to keep the tape uniform.
ForwardTape forward(const ModelParams& params, const MiniBatchPlan& plan,
                    const DenseMatrix& features, const HistoryStore* history = nullptr);

enum class LossMode { softmax_ce, sigmoid_bce };

struct LossResult {
    double loss = 0.0;
    DenseMatrix dz_weighted;  // row i = (w_i / B) * dz_raw_i
    DenseMatrix dz_raw;       // unweighted d loss_i / d z_i
};

// loss = (1/B) sum_i w_i phi(z_i, y_i) over the tape's batch nodes.
// softmax_ce: phi = cross entropy on class index, dz_raw = softmax(z) - onehot.
// sigmoid_bce: phi = mean over classes of binary cross entropy,
//              dz_raw = (sigmoid(z) - y) / C.
LossResult loss_and_output_grad(const ForwardTape& tape, const GraphDataset& ds, LossMode mode,
                                const std::vector<double>& weights);

// Reverse pass through the plan. History branches are constants: no gradient
// flows through stale products. relu'(0) = 0.
GradBundle backward(const ModelParams& params, const MiniBatchPlan& plan,
                    const ForwardTape& tape, const DenseMatrix& dz_last);

enum class GradNormMode { last_preactivation, last_layer_weight };

// Per-sample gradient-norm proxies from one shared backward pass:
//   last_preactivation: ||dz_raw row i||_2
//   last_layer_weight:  ||w_input(L) row i||_2 * ||dz_raw row i||_2, the
//                       Frobenius norm of the rank-1 per-sample W(L) gradient.
std::vector<double> per_sample_grad_norms(const ForwardTape& tape, const DenseMatrix& dz_raw,
                                          GradNormMode mode);

// Exact activations/pre-activations over all nodes: h[0] = X, z[l-1], h[l].
struct FullPass {
    std::vector<DenseMatrix> h;  // size L+1
    std::vector<DenseMatrix> z;  // size L
};
FullPass full_forward(const ModelParams& params, const SparseMatrix& l, const DenseMatrix& x);

// Exact mean gradient over the training mask: batch = train ids, p = 1,
// w = 1, so the objective is (1/|train|) sum phi. Deterministic.
GradBundle full_gradient_oracle(const ModelParams& params, const GraphDataset& ds,
                                const SparseMatrix& l, LossMode mode);

// One exact pass that installs h_bar(l) = H(l) for every node, then marks
// everything fresh at `step`.
void init_history_full_forward(HistoryStore& store, const ModelParams& params,
                               const SparseMatrix& l, const DenseMatrix& x, long step);

} // namespace mvsgnn
