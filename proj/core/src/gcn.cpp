#include "mvsgnn/gcn.hpp"

#include <cmath>

#include "mvsgnn/errors.hpp"

namespace mvsgnn {

ForwardTape forward(const ModelParams& params, const MiniBatchPlan& plan,
                    const DenseMatrix& features, const HistoryStore* history) {
    const Index depth = plan.depth();
    if (depth != params.num_layers()) {
        throw DimensionMismatchError("forward: plan depth != layer count");
    }
    if (features.cols != params.dims[0]) {
        throw DimensionMismatchError("forward: feature dim != F_0");
    }

    ForwardTape tape;
    tape.batch_nodes = plan.batch_nodes();
    tape.inclusion_probs = plan.inclusion_probs;
    tape.h.resize(static_cast<std::size_t>(depth) + 1);
    tape.z.resize(static_cast<std::size_t>(depth));
    tape.w_input.resize(static_cast<std::size_t>(depth));

    tape.h[0] = gather_rows(features, plan.node_sets[0]);

    for (Index l = 1; l <= depth; ++l) {
        const PlanLayer& layer = plan.layers[static_cast<std::size_t>(l - 1)];
        DenseMatrix agg;
        if (layer.has_stale) {
            if (history == nullptr && l > 1) {
                throw MissingHistoryError("plan has stale parts but no history was given");
            }
            if (l == 1) {
                // Layer-0 "history" is the exact input features.
                agg = spmm(layer.fresh, tape.h[0]);
                DenseMatrix stale_part = spmm(layer.stale, features);
                axpy(agg, 1.0, stale_part);
            } else {
                agg = combined_aggregate(layer.fresh, tape.h[static_cast<std::size_t>(l - 1)],
                                         layer.stale, *history, l);
            }
        } else {
            agg = spmm(layer.fresh, tape.h[static_cast<std::size_t>(l - 1)]);
        }

        if (params.aggregation == Aggregation::concat) {
            const auto& sp = plan.self_pos[static_cast<std::size_t>(l - 1)];
            DenseMatrix self_rows(static_cast<Index>(sp.size()), params.dims[static_cast<std::size_t>(l - 1)]);
            const DenseMatrix& below = tape.h[static_cast<std::size_t>(l - 1)];
            for (std::size_t r = 0; r < sp.size(); ++r) {
                if (sp[r] < 0) {
                    throw MissingHistoryError("concat aggregation needs self rows at every layer");
                }
                const double* src = below.row_ptr(sp[r]);
                double* dst = self_rows.row_ptr(static_cast<Index>(r));
                for (Index j = 0; j < self_rows.cols; ++j) dst[j] = src[j];
            }
            tape.w_input[static_cast<std::size_t>(l - 1)] = hconcat(self_rows, agg);
        } else {
            tape.w_input[static_cast<std::size_t>(l - 1)] = std::move(agg);
        }

        tape.z[static_cast<std::size_t>(l - 1)] =
            matmul(tape.w_input[static_cast<std::size_t>(l - 1)], params.weights[static_cast<std::size_t>(l - 1)]);
        tape.h[static_cast<std::size_t>(l)] = relu(tape.z[static_cast<std::size_t>(l - 1)]);
    }
    return tape;
}

namespace {

double softplus(double x) {
    // log(1 + e^x), stable for large |x|.
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

} // namespace

LossResult loss_and_output_grad(const ForwardTape& tape, const GraphDataset& ds, LossMode mode,
                                const std::vector<double>& weights) {
    const DenseMatrix& z = tape.logits();
    const Index b = z.rows;
    if (static_cast<Index>(weights.size()) != b) {
        throw ShapeMismatchError("loss: weight count != batch size");
    }
    for (double w : weights) {
        if (!(w > 0.0)) throw InvalidProbabilityError("loss: weights must be positive");
    }
    if (mode == LossMode::softmax_ce && ds.label_mode != LabelMode::single) {
        throw LabelModeMismatchError("softmax_ce requires single-label data");
    }
    if (mode == LossMode::sigmoid_bce && ds.label_mode != LabelMode::multi) {
        throw LabelModeMismatchError("sigmoid_bce requires multi-label data");
    }

    LossResult res;
    res.dz_raw = DenseMatrix(b, z.cols);
    res.dz_weighted = DenseMatrix(b, z.cols);
    double loss = 0.0;

    for (Index i = 0; i < b; ++i) {
        const Index node = tape.batch_nodes[static_cast<std::size_t>(i)];
        const double* zi = z.row_ptr(i);
        double* raw = res.dz_raw.row_ptr(i);
        double per_sample = 0.0;

        if (mode == LossMode::softmax_ce) {
            const Index y = ds.labels_single[static_cast<std::size_t>(node)];
            if (y < 0 || y >= z.cols) throw UnknownLabelClassError("class index out of range");
            double zmax = zi[0];
            for (Index c = 1; c < z.cols; ++c) zmax = std::max(zmax, zi[c]);
            double denom = 0.0;
            for (Index c = 0; c < z.cols; ++c) denom += std::exp(zi[c] - zmax);
            const double log_denom = std::log(denom) + zmax;
            per_sample = log_denom - zi[y];
            for (Index c = 0; c < z.cols; ++c) {
                raw[c] = std::exp(zi[c] - log_denom) - (c == y ? 1.0 : 0.0);
            }
        } else {
            const Index c_count = z.cols;
            for (Index c = 0; c < c_count; ++c) {
                const double y = ds.labels_multi(node, c);
                per_sample += softplus(zi[c]) - y * zi[c];
                const double sig = 1.0 / (1.0 + std::exp(-zi[c]));
                raw[c] = (sig - y) / static_cast<double>(c_count);
            }
            per_sample /= static_cast<double>(c_count);
        }

        const double w = weights[static_cast<std::size_t>(i)];
        loss += w * per_sample;
        double* dw = res.dz_weighted.row_ptr(i);
        for (Index c = 0; c < z.cols; ++c) dw[c] = raw[c] * w / static_cast<double>(b);
    }
    res.loss = loss / static_cast<double>(b);
    return res;
}

GradBundle backward(const ModelParams& params, const MiniBatchPlan& plan,
                    const ForwardTape& tape, const DenseMatrix& dz_last) {
    const Index depth = plan.depth();
    if (dz_last.rows != static_cast<Index>(plan.batch_nodes().size()) ||
        dz_last.cols != params.dims.back()) {
        throw ShapeMismatchError("backward: dz shape mismatch");
    }

    GradBundle grads = zero_grads(params);
    DenseMatrix dz = dz_last;

    for (Index l = depth; l >= 1; --l) {
        const PlanLayer& layer = plan.layers[static_cast<std::size_t>(l - 1)];
        const DenseMatrix& w_in = tape.w_input[static_cast<std::size_t>(l - 1)];
        grads.weight_grads[static_cast<std::size_t>(l - 1)] = matmul_at_b(w_in, dz);
        if (l == 1) break;

        DenseMatrix d_win = matmul_a_bt(dz, params.weights[static_cast<std::size_t>(l - 1)]);
        const Index f_below = params.dims[static_cast<std::size_t>(l - 1)];
        DenseMatrix dh(static_cast<Index>(plan.node_sets[static_cast<std::size_t>(l - 1)].size()), f_below);

        if (params.aggregation == Aggregation::concat) {
            // First half feeds the self rows, second half goes through the
            // fresh Laplacian. Stale products get no gradient.
            const auto& sp = plan.self_pos[static_cast<std::size_t>(l - 1)];
            DenseMatrix d_agg(d_win.rows, f_below);
            for (Index r = 0; r < d_win.rows; ++r) {
                const double* src = d_win.row_ptr(r);
                double* self_dst = dh.row_ptr(sp[static_cast<std::size_t>(r)]);
                for (Index j = 0; j < f_below; ++j) self_dst[j] += src[j];
                double* agg_dst = d_agg.row_ptr(r);
                for (Index j = 0; j < f_below; ++j) agg_dst[j] = src[f_below + j];
            }
            spmm_transpose_accumulate(layer.fresh, d_agg, dh);
        } else {
            spmm_transpose_accumulate(layer.fresh, d_win, dh);
        }

        relu_backward_inplace(dh, tape.z[static_cast<std::size_t>(l - 2)]);
        dz = std::move(dh);
    }
    return grads;
}

std::vector<double> per_sample_grad_norms(const ForwardTape& tape, const DenseMatrix& dz_raw,
                                          GradNormMode mode) {
    const Index b = dz_raw.rows;
    if (b != static_cast<Index>(tape.batch_nodes.size())) {
        throw ShapeMismatchError("per_sample_grad_norms: row count mismatch");
    }
    std::vector<double> out(static_cast<std::size_t>(b));
    const DenseMatrix& w_in = tape.w_input.back();
    for (Index i = 0; i < b; ++i) {
        const double dz_norm = row_norm2(dz_raw, i);
        if (mode == GradNormMode::last_preactivation) {
            out[static_cast<std::size_t>(i)] = dz_norm;
        } else {
            // ||a b^T||_F = ||a|| * ||b|| for the rank-1 per-sample gradient.
            out[static_cast<std::size_t>(i)] = row_norm2(w_in, i) * dz_norm;
        }
    }
    return out;
}

FullPass full_forward(const ModelParams& params, const SparseMatrix& l, const DenseMatrix& x) {
    FullPass fp;
    fp.h.push_back(x);
    for (Index layer = 1; layer <= params.num_layers(); ++layer) {
        DenseMatrix agg = spmm(l, fp.h.back());
        DenseMatrix w_in = params.aggregation == Aggregation::concat
                               ? hconcat(fp.h.back(), agg)
                               : std::move(agg);
        fp.z.push_back(matmul(w_in, params.weights[static_cast<std::size_t>(layer - 1)]));
        fp.h.push_back(relu(fp.z.back()));
    }
    return fp;
}

GradBundle full_gradient_oracle(const ModelParams& params, const GraphDataset& ds,
                                const SparseMatrix& l, LossMode mode) {
    const auto train = ds.train_ids();
    MiniBatchPlan plan = exact_plan(l, train, params.num_layers());
    ForwardTape tape = forward(params, plan, ds.features);
    const std::vector<double> weights(train.size(), 1.0);
    LossResult lr = loss_and_output_grad(tape, ds, mode, weights);
    return backward(params, plan, tape, lr.dz_weighted);
}

void init_history_full_forward(HistoryStore& store, const ModelParams& params,
                               const SparseMatrix& l, const DenseMatrix& x, long step) {
    FullPass fp = full_forward(params, l, x);
    for (Index layer = 1; layer <= store.num_history_layers(); ++layer) {
        store.mutable_layer(layer) = fp.h[static_cast<std::size_t>(layer)];
    }
    std::fill(store.freshness.begin(), store.freshness.end(), step);
}

} // namespace mvsgnn
