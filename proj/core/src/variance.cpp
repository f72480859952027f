#include "mvsgnn/variance.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mvsgnn/errors.hpp"
#include "mvsgnn/rng.hpp"

namespace mvsgnn {

namespace {

// Sampled aggregate rows for one layer, exact inputs below. h_below is the
// exact H^(layer-1) over all nodes; returns sum_j Ltilde_ij h_below_j per row.
DenseMatrix sampled_aggregate(const SamplerSpec& spec, const SparseMatrix& l,
                              const DenseMatrix& h_below, const DenseMatrix& h_bar_below,
                              const std::vector<Index>& rows, Rng& rng) {
    const Index f = h_below.cols;
    DenseMatrix agg(static_cast<Index>(rows.size()), f);

    switch (spec.strategy) {
        case Strategy::uniform:
            // Exact inference: all neighbors, no noise.
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const Index gi = rows[r];
                double* out = agg.row_ptr(static_cast<Index>(r));
                for (Index k = l.row_ptr[static_cast<std::size_t>(gi)]; k < l.row_ptr[static_cast<std::size_t>(gi) + 1]; ++k) {
                    const double v = l.values[static_cast<std::size_t>(k)];
                    const double* h = h_below.row_ptr(l.col_idx[static_cast<std::size_t>(k)]);
                    for (Index j = 0; j < f; ++j) out[j] += v * h[j];
                }
            }
            break;

        case Strategy::node_wise:
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const Index gi = rows[r];
                const Index lo = l.row_ptr[static_cast<std::size_t>(gi)];
                const Index deg = l.row_ptr[static_cast<std::size_t>(gi) + 1] - lo;
                double* out = agg.row_ptr(static_cast<Index>(r));
                if (deg <= spec.neighbor_s) {
                    for (Index k = lo; k < lo + deg; ++k) {
                        const double v = l.values[static_cast<std::size_t>(k)];
                        const double* h = h_below.row_ptr(l.col_idx[static_cast<std::size_t>(k)]);
                        for (Index j = 0; j < f; ++j) out[j] += v * h[j];
                    }
                } else {
                    const double scale = static_cast<double>(deg) / static_cast<double>(spec.neighbor_s);
                    for (auto p : rng.sample_without_replacement(deg, spec.neighbor_s)) {
                        const std::size_t k = static_cast<std::size_t>(lo + p);
                        const double v = scale * l.values[k];
                        const double* h = h_below.row_ptr(l.col_idx[k]);
                        for (Index j = 0; j < f; ++j) out[j] += v * h[j];
                    }
                }
            }
            break;

        case Strategy::layer_wise: {
            std::set<Index> cand_set;
            for (Index gi : rows) {
                for (Index k = l.row_ptr[static_cast<std::size_t>(gi)]; k < l.row_ptr[static_cast<std::size_t>(gi) + 1]; ++k) {
                    cand_set.insert(l.col_idx[static_cast<std::size_t>(k)]);
                }
            }
            const std::vector<Index> candidates(cand_set.begin(), cand_set.end());
            std::vector<double> weights(candidates.size(), 1.0);
            if (spec.layer_dist == LayerDist::degree) {
                for (std::size_t i = 0; i < candidates.size(); ++i) {
                    weights[i] = static_cast<double>(l.row_nnz(candidates[i]));
                }
            }
            double total = 0.0;
            for (double w : weights) total += w;
            std::vector<double> cdf(weights.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < weights.size(); ++i) {
                acc += weights[i] / total;
                cdf[i] = acc;
            }
            cdf.back() = 1.0;
            const Index s = spec.layer_sizes.empty() ? spec.batch_size : spec.layer_sizes[0];
            std::unordered_map<Index, double> scale;  // global id -> m / (s p_j)
            for (Index d = 0; d < s; ++d) {
                const double u = rng.uniform01();
                const std::size_t j = static_cast<std::size_t>(
                    std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
                const std::size_t jj = std::min(j, candidates.size() - 1);
                scale[candidates[jj]] += 1.0 / (static_cast<double>(s) * weights[jj] / total);
            }
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const Index gi = rows[r];
                double* out = agg.row_ptr(static_cast<Index>(r));
                for (Index k = l.row_ptr[static_cast<std::size_t>(gi)]; k < l.row_ptr[static_cast<std::size_t>(gi) + 1]; ++k) {
                    const auto it = scale.find(l.col_idx[static_cast<std::size_t>(k)]);
                    if (it == scale.end()) continue;
                    const double v = it->second * l.values[static_cast<std::size_t>(k)];
                    const double* h = h_below.row_ptr(l.col_idx[static_cast<std::size_t>(k)]);
                    for (Index j = 0; j < f; ++j) out[j] += v * h[j];
                }
            }
            break;
        }

        case Strategy::subgraph:
        case Strategy::mvs:
        case Strategy::mvs_bandit: {
            const std::set<Index> in_rows(rows.begin(), rows.end());
            const bool use_history = spec.strategy != Strategy::subgraph;
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const Index gi = rows[r];
                double* out = agg.row_ptr(static_cast<Index>(r));
                for (Index k = l.row_ptr[static_cast<std::size_t>(gi)]; k < l.row_ptr[static_cast<std::size_t>(gi) + 1]; ++k) {
                    const Index gj = l.col_idx[static_cast<std::size_t>(k)];
                    const bool fresh = in_rows.count(gj) > 0;
                    if (!fresh && !use_history) continue;  // subgraph: mass dropped
                    const double v = l.values[static_cast<std::size_t>(k)];
                    const double* h = fresh ? h_below.row_ptr(gj) : h_bar_below.row_ptr(gj);
                    for (Index j = 0; j < f; ++j) out[j] += v * h[j];
                }
            }
            break;
        }
    }
    return agg;
}

McEstimate finish(const KahanSum& sum, const KahanSum& sum_sq, Index trials) {
    McEstimate e;
    e.trials = trials;
    e.mean = sum.value() / static_cast<double>(trials);
    const double var =
        std::max(0.0, sum_sq.value() / static_cast<double>(trials) - e.mean * e.mean);
    e.se = std::sqrt(var / static_cast<double>(trials));
    return e;
}

} // namespace

McEstimate mc_embedding_variance(const SamplerSpec& spec, const ModelParams& params,
                                 const GraphDataset& ds, const SparseMatrix& l, Index layer,
                                 Index trials, std::uint64_t seed, const HistoryStore* history) {
    const FullPass fp = full_forward(params, l, ds.features);
    const DenseMatrix& h_below = fp.h[static_cast<std::size_t>(layer - 1)];
    const DenseMatrix& h_exact = fp.h[static_cast<std::size_t>(layer)];
    const DenseMatrix& w = params.weights[static_cast<std::size_t>(layer - 1)];

    // Stale inputs at layer-1: exact features when layer == 1, otherwise the
    // history cache (zeros if absent, matching a never-refreshed store).
    DenseMatrix zeros;
    const DenseMatrix* h_bar = &h_below;
    if (spec.strategy == Strategy::mvs || spec.strategy == Strategy::mvs_bandit) {
        if (layer == 1) {
            h_bar = &ds.features;
        } else if (history != nullptr) {
            h_bar = &history->layer(layer - 1);
        } else {
            zeros = DenseMatrix(h_below.rows, h_below.cols);
            h_bar = &zeros;
        }
    }

    const bool per_row_sampling =
        spec.strategy == Strategy::node_wise || spec.strategy == Strategy::layer_wise ||
        spec.strategy == Strategy::uniform;
    const Index n = ds.num_nodes();
    std::vector<Index> all_rows(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) all_rows[static_cast<std::size_t>(i)] = i;

    Rng root(seed);
    KahanSum sum, sum_sq;
    for (Index t = 0; t < trials; ++t) {
        Rng rng = root.substream(static_cast<std::uint64_t>(t));
        std::vector<Index> rows;
        if (per_row_sampling) {
            rows = all_rows;
        } else {
            const auto picks = rng.sample_without_replacement(n, std::min(spec.batch_size, n));
            rows.assign(picks.begin(), picks.end());
        }

        DenseMatrix agg = sampled_aggregate(spec, l, h_below, *h_bar, rows, rng);
        DenseMatrix w_in = params.aggregation == Aggregation::concat
                               ? hconcat(gather_rows(h_below, rows), agg)
                               : std::move(agg);
        const DenseMatrix h_sampled = relu(matmul(w_in, w));

        double err = 0.0;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const double* a = h_sampled.row_ptr(static_cast<Index>(r));
            const double* b = h_exact.row_ptr(rows[r]);
            for (Index j = 0; j < h_sampled.cols; ++j) {
                const double d = a[j] - b[j];
                err += d * d;
            }
        }
        err /= static_cast<double>(rows.size());
        sum.add(err);
        sum_sq.add(err * err);
    }
    return finish(sum, sum_sq, trials);
}

namespace {

// Draws one batch (global ids + inclusion probabilities) per the spec.
void draw_batch(const SamplerSpec& spec, const std::vector<Index>& candidates,
                const std::vector<double>& mvs_probs, Rng& rng, std::vector<Index>& batch,
                std::vector<double>& probs) {
    batch.clear();
    probs.clear();
    const Index n = static_cast<Index>(candidates.size());
    if (spec.strategy == Strategy::uniform) {
        const double p = static_cast<double>(spec.batch_size) / static_cast<double>(n);
        for (int attempt = 0; attempt < 16 && batch.empty(); ++attempt) {
            for (Index i = 0; i < n; ++i) {
                if (rng.bernoulli(p)) {
                    batch.push_back(candidates[static_cast<std::size_t>(i)]);
                    probs.push_back(p);
                }
            }
        }
        if (batch.empty()) throw EmptyBatchError("uniform Bernoulli draw failed 16 times");
    } else if (spec.strategy == Strategy::mvs || spec.strategy == Strategy::mvs_bandit) {
        for (int attempt = 0; attempt < 16 && batch.empty(); ++attempt) {
            for (Index i = 0; i < n; ++i) {
                if (rng.bernoulli(mvs_probs[static_cast<std::size_t>(i)])) {
                    batch.push_back(candidates[static_cast<std::size_t>(i)]);
                    probs.push_back(mvs_probs[static_cast<std::size_t>(i)]);
                }
            }
        }
        if (batch.empty()) throw EmptyBatchError("importance Bernoulli draw failed 16 times");
    } else {
        const auto picks = rng.sample_without_replacement(n, spec.batch_size);
        const double p = static_cast<double>(spec.batch_size) / static_cast<double>(n);
        for (auto pos : picks) {
            batch.push_back(candidates[static_cast<std::size_t>(pos)]);
            probs.push_back(p);
        }
        std::sort(batch.begin(), batch.end());
    }
}

MiniBatchPlan build_plan(const SamplerSpec& spec, const SparseMatrix& l,
                         const std::vector<Index>& batch, const std::vector<double>& probs,
                         Index depth, Rng& rng) {
    switch (spec.strategy) {
        case Strategy::uniform:
            return importance_plan(l, batch, probs, true, depth, Strategy::uniform);
        case Strategy::node_wise:
            return node_wise_plan(l, batch, spec.neighbor_s, depth, rng, probs);
        case Strategy::layer_wise: {
            std::vector<Index> sizes = spec.layer_sizes;
            if (sizes.empty()) sizes.assign(static_cast<std::size_t>(depth), spec.batch_size);
            return layer_wise_plan(l, batch, sizes, spec.layer_dist, depth, rng, probs);
        }
        case Strategy::subgraph:
            return subgraph_plan(l, batch, depth, probs);
        case Strategy::mvs:
        case Strategy::mvs_bandit:
            return importance_plan(l, batch, probs, spec.exact_inference, depth, spec.strategy);
    }
    throw ConfigError("unreachable strategy");
}

} // namespace

GradientMseReport mc_gradient_mse(const SamplerSpec& spec, const ModelParams& params,
                                  const GraphDataset& ds, const SparseMatrix& l, LossMode loss,
                                  Index trials, std::uint64_t seed, const HistoryStore* history) {
    const Index depth = params.num_layers();
    const std::vector<Index> candidates = ds.train_ids();
    const Index n = static_cast<Index>(candidates.size());

    // Exact pass over the training set: full gradient, per-sample raw output
    // gradients, and true per-sample norms for the importance distribution.
    MiniBatchPlan full_plan = exact_plan(l, candidates, depth);
    ForwardTape full_tape = forward(params, full_plan, ds.features);
    const std::vector<double> unit(candidates.size(), 1.0);
    LossResult full_loss = loss_and_output_grad(full_tape, ds, loss, unit);
    const GradBundle grad_f = backward(params, full_plan, full_tape, full_loss.dz_weighted);

    std::vector<double> mvs_probs;
    if (spec.strategy == Strategy::mvs || spec.strategy == Strategy::mvs_bandit) {
        std::vector<double> norms;
        if (spec.norm_source == NormSource::true_full) {
            // Exact per-sample gradient norms: one backward pass per node
            // with only that node's raw output gradient injected.
            DenseMatrix dz_one(n, params.dims.back());
            norms.reserve(candidates.size());
            for (Index i = 0; i < n; ++i) {
                dz_one.fill(0.0);
                const double* src = full_loss.dz_raw.row_ptr(i);
                double* dst = dz_one.row_ptr(i);
                for (Index c = 0; c < dz_one.cols; ++c) dst[c] = src[c];
                const GradBundle gi = backward(params, full_plan, full_tape, dz_one);
                norms.push_back(std::sqrt(gi.squared_norm()));
            }
        } else {
            const GradNormMode mode = spec.norm_source == NormSource::proxy_last_layer_weight
                                          ? GradNormMode::last_layer_weight
                                          : GradNormMode::last_preactivation;
            norms = per_sample_grad_norms(full_tape, full_loss.dz_raw, mode);
        }
        mvs_probs = optimal_probs(norms, spec.batch_size).probs;
    }

    std::unordered_map<Index, Index> cand_pos;
    for (std::size_t i = 0; i < candidates.size(); ++i) cand_pos[candidates[i]] = static_cast<Index>(i);

    Rng root(seed);
    KahanSum bias_sum, bias_sq, var_sum, var_sq, tot_sum, tot_sq;
    std::vector<Index> batch;
    std::vector<double> probs;
    DenseMatrix dz_full(n, params.dims.back());

    for (Index t = 0; t < trials; ++t) {
        Rng rng = root.substream(static_cast<std::uint64_t>(t));
        draw_batch(spec, candidates, mvs_probs, rng, batch, probs);
        const Index b_rows = static_cast<Index>(batch.size());

        // g_tilde: sampled embeddings. Weight w_i = B_rows / (n p_i) makes
        // the loss estimator unbiased for the 1/n-scaled objective.
        MiniBatchPlan plan = build_plan(spec, l, batch, probs, depth, rng);
        ForwardTape tape = forward(params, plan, ds.features, history);
        std::vector<double> weights(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            weights[i] = static_cast<double>(b_rows) / (static_cast<double>(n) * probs[i]);
        }
        LossResult lr = loss_and_output_grad(tape, ds, loss, weights);
        const GradBundle g_tilde = backward(params, plan, tape, lr.dz_weighted);

        // g: same batch and weights, exact embeddings, backpropagated through
        // the full computation graph.
        dz_full.fill(0.0);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const Index row = cand_pos[batch[i]];
            const double* src = full_loss.dz_raw.row_ptr(row);
            double* dst = dz_full.row_ptr(row);
            const double coeff = 1.0 / (static_cast<double>(n) * probs[i]);
            for (Index c = 0; c < dz_full.cols; ++c) dst[c] = coeff * src[c];
        }
        const GradBundle g = backward(params, full_plan, full_tape, dz_full);

        const double bias = g_tilde.squared_distance(g);
        const double var = g.squared_distance(grad_f);
        const double total = g_tilde.squared_distance(grad_f);
        bias_sum.add(bias);
        bias_sq.add(bias * bias);
        var_sum.add(var);
        var_sq.add(var * var);
        tot_sum.add(total);
        tot_sq.add(total * total);
    }

    GradientMseReport rep;
    rep.trials = trials;
    const McEstimate b = finish(bias_sum, bias_sq, trials);
    const McEstimate v = finish(var_sum, var_sq, trials);
    const McEstimate tt = finish(tot_sum, tot_sq, trials);
    rep.bias_hat = b.mean;
    rep.bias_se = b.se;
    rep.grad_var_hat = v.mean;
    rep.grad_var_se = v.se;
    rep.total_mse_hat = tt.mean;
    rep.total_se = tt.se;
    rep.decomposition_residual = std::abs(tt.mean - b.mean - v.mean);
    return rep;
}

IdentityCheck us_is_identity_check(const std::vector<double>& g_bar, Index budget) {
    const Index n = static_cast<Index>(g_bar.size());
    const std::vector<double> g = uplift_smallest(g_bar, budget);
    const ProbabilityVector p = optimal_probs(g, budget);
    bool all_ones = true;
    for (double v : p.probs) all_ones = all_ones && v == 1.0;
    if (p.kappa != n && !all_ones) {
        throw RegimeViolationError("kappa < N even after uplifting the smallest entries");
    }
    const VarianceStats stats = variance_stats(g, p);
    IdentityCheck chk;
    chk.lhs = stats.gap;
    chk.rhs = stats.gap_closed_form;
    chk.abs_err = std::abs(chk.lhs - chk.rhs);
    return chk;
}

BoundIngredients bound_ingredients(const GraphDataset& ds, const ModelParams& params,
                                   const SparseMatrix& l, const HistoryStore& store) {
    BoundIngredients out;
    out.avg_degree = static_cast<double>(l.nnz()) / static_cast<double>(l.n_rows);

    double beta = 0.0;
    for (Index i = 0; i < l.n_rows; ++i) {
        double s = 0.0;
        for (Index k = l.row_ptr[static_cast<std::size_t>(i)]; k < l.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            s += l.values[static_cast<std::size_t>(k)] * l.values[static_cast<std::size_t>(k)];
        }
        beta = std::max(beta, s);
    }
    beta = std::sqrt(beta);

    const FullPass fp = full_forward(params, l, ds.features);
    const StalenessReport sr = staleness_report(store, 0, &fp.h, &params.weights);

    const Index depth = params.num_layers();
    out.beta.assign(static_cast<std::size_t>(depth), beta);
    out.delta_gamma.assign(static_cast<std::size_t>(depth), 0.0);
    out.bound.assign(static_cast<std::size_t>(depth), 0.0);
    for (Index layer = 2; layer <= depth; ++layer) {
        // Layer `layer` aggregates history from layer-1; its staleness gap
        // sits at per_layer_delta[layer-2].
        const double dg = sr.per_layer_delta[static_cast<std::size_t>(layer - 2)];
        out.delta_gamma[static_cast<std::size_t>(layer - 1)] = dg;
        out.bound[static_cast<std::size_t>(layer - 1)] = out.avg_degree * beta * beta * dg * dg;
    }
    return out;
}

} // namespace mvsgnn
