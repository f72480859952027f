#include "mvsgnn/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mvsgnn/errors.hpp"
#include "mvsgnn/solver.hpp"

namespace mvsgnn {

namespace {

std::vector<Index> pick_ids(const std::vector<Index>& pool, const std::vector<std::int64_t>& pos) {
    std::vector<Index> out;
    out.reserve(pos.size());
    for (auto p : pos) out.push_back(pool[static_cast<std::size_t>(p)]);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

MiniBatchPlan uniform_batch(const SparseMatrix& l, const std::vector<Index>& candidates,
                            Index batch_size, Index depth, Rng& rng) {
    const Index n = static_cast<Index>(candidates.size());
    if (batch_size < 1 || batch_size > n) {
        throw BatchTooLargeError("batch size must lie in [1, |candidates|]");
    }
    const auto batch = pick_ids(candidates, rng.sample_without_replacement(n, batch_size));
    MiniBatchPlan plan = exact_plan(l, batch, depth);
    plan.strategy = Strategy::uniform;
    plan.inclusion_probs.assign(batch.size(),
                                static_cast<double>(batch_size) / static_cast<double>(n));
    return plan;
}

MiniBatchPlan node_wise_plan(const SparseMatrix& l, const std::vector<Index>& batch, Index s,
                             Index depth, Rng& rng, const std::vector<double>& inclusion_probs) {
    if (s < 1) throw ConfigError("node-wise sample size must be >= 1");
    MiniBatchPlan plan;
    plan.strategy = Strategy::node_wise;
    plan.node_sets.assign(static_cast<std::size_t>(depth) + 1, {});
    plan.layers.resize(static_cast<std::size_t>(depth));
    plan.node_sets[static_cast<std::size_t>(depth)] = batch;

    for (Index lev = depth; lev >= 1; --lev) {
        const auto& rows = plan.node_sets[static_cast<std::size_t>(lev)];
        // Rows stay available below so the layer chain (and concat self rows)
        // never needs an id outside the maps.
        std::set<Index> below(rows.begin(), rows.end());
        std::vector<std::vector<std::pair<Index, double>>> row_entries(rows.size());

        for (std::size_t r = 0; r < rows.size(); ++r) {
            const Index gi = rows[r];
            const Index lo = l.row_ptr[static_cast<std::size_t>(gi)];
            const Index hi = l.row_ptr[static_cast<std::size_t>(gi) + 1];
            const Index deg = hi - lo;
            if (deg <= s) {
                for (Index k = lo; k < hi; ++k) {
                    row_entries[r].emplace_back(l.col_idx[static_cast<std::size_t>(k)],
                                                l.values[static_cast<std::size_t>(k)]);
                }
            } else {
                const double scale = static_cast<double>(deg) / static_cast<double>(s);
                const auto picks = rng.sample_without_replacement(deg, s);
                for (auto p : picks) {
                    const std::size_t k = static_cast<std::size_t>(lo + p);
                    row_entries[r].emplace_back(l.col_idx[k], scale * l.values[k]);
                }
            }
            for (const auto& [col, val] : row_entries[r]) below.insert(col);
        }

        auto& node_set_below = plan.node_sets[static_cast<std::size_t>(lev - 1)];
        node_set_below.assign(below.begin(), below.end());
        std::unordered_map<Index, Index> pos;
        for (std::size_t i = 0; i < node_set_below.size(); ++i) pos[node_set_below[i]] = static_cast<Index>(i);

        SparseMatrix fresh(static_cast<Index>(rows.size()), static_cast<Index>(node_set_below.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            auto& entries = row_entries[r];
            for (auto& [col, val] : entries) col = pos[col];
            std::sort(entries.begin(), entries.end());
            for (const auto& [col, val] : entries) {
                fresh.col_idx.push_back(col);
                fresh.values.push_back(val);
            }
            fresh.row_ptr[r + 1] = fresh.nnz();
        }
        plan.layers[static_cast<std::size_t>(lev - 1)].fresh = std::move(fresh);
    }

    plan.inclusion_probs = inclusion_probs.empty() ? std::vector<double>(batch.size(), 1.0)
                                                   : inclusion_probs;
    finalize_plan(plan, l.n_rows);
    return plan;
}

MiniBatchPlan layer_wise_plan(const SparseMatrix& l, const std::vector<Index>& batch,
                              const std::vector<Index>& layer_sizes, LayerDist dist, Index depth,
                              Rng& rng, const std::vector<double>& inclusion_probs) {
    if (layer_sizes.empty()) throw ConfigError("layer_sizes must be nonempty");
    for (Index s : layer_sizes) {
        if (s < 1) throw ConfigError("layer sizes must be positive");
    }

    MiniBatchPlan plan;
    plan.strategy = Strategy::layer_wise;
    plan.node_sets.assign(static_cast<std::size_t>(depth) + 1, {});
    plan.layers.resize(static_cast<std::size_t>(depth));
    plan.node_sets[static_cast<std::size_t>(depth)] = batch;

    for (Index lev = depth; lev >= 1; --lev) {
        const auto& rows = plan.node_sets[static_cast<std::size_t>(lev)];
        const std::size_t size_idx = std::min(static_cast<std::size_t>(depth - lev),
                                              layer_sizes.size() - 1);
        const Index s = layer_sizes[size_idx];

        // Candidate pool: union of the rows' neighborhoods.
        std::set<Index> cand_set;
        for (Index gi : rows) {
            for (Index k = l.row_ptr[static_cast<std::size_t>(gi)]; k < l.row_ptr[static_cast<std::size_t>(gi) + 1]; ++k) {
                cand_set.insert(l.col_idx[static_cast<std::size_t>(k)]);
            }
        }
        if (cand_set.empty()) throw EmptyCandidateSetError("no neighbors under the batch rows");
        const std::vector<Index> candidates(cand_set.begin(), cand_set.end());

        std::vector<double> weights(candidates.size(), 1.0);
        if (dist == LayerDist::degree) {
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

        // s i.i.d. draws; duplicates accumulate multiplicity.
        std::unordered_map<Index, Index> multiplicity;
        for (Index d = 0; d < s; ++d) {
            const double u = rng.uniform01();
            const std::size_t j = static_cast<std::size_t>(
                std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            multiplicity[candidates[std::min(j, candidates.size() - 1)]] += 1;
        }

        std::set<Index> below(rows.begin(), rows.end());
        for (const auto& [id, m] : multiplicity) below.insert(id);
        auto& node_set_below = plan.node_sets[static_cast<std::size_t>(lev - 1)];
        node_set_below.assign(below.begin(), below.end());
        std::unordered_map<Index, Index> pos;
        for (std::size_t i = 0; i < node_set_below.size(); ++i) pos[node_set_below[i]] = static_cast<Index>(i);
        std::unordered_map<Index, double> col_scale;  // global id -> m / (s p_j)
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const auto it = multiplicity.find(candidates[i]);
            if (it == multiplicity.end()) continue;
            const double pj = weights[i] / total;
            col_scale[candidates[i]] =
                static_cast<double>(it->second) / (static_cast<double>(s) * pj);
        }

        SparseMatrix fresh(static_cast<Index>(rows.size()), static_cast<Index>(node_set_below.size()));
        std::vector<std::pair<Index, double>> row_buf;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            row_buf.clear();
            const Index gi = rows[r];
            for (Index k = l.row_ptr[static_cast<std::size_t>(gi)]; k < l.row_ptr[static_cast<std::size_t>(gi) + 1]; ++k) {
                const Index gj = l.col_idx[static_cast<std::size_t>(k)];
                const auto it = col_scale.find(gj);
                if (it == col_scale.end()) continue;
                row_buf.emplace_back(pos[gj], it->second * l.values[static_cast<std::size_t>(k)]);
            }
            std::sort(row_buf.begin(), row_buf.end());
            for (const auto& [col, val] : row_buf) {
                fresh.col_idx.push_back(col);
                fresh.values.push_back(val);
            }
            fresh.row_ptr[r + 1] = fresh.nnz();
        }
        plan.layers[static_cast<std::size_t>(lev - 1)].fresh = std::move(fresh);
    }

    plan.inclusion_probs = inclusion_probs.empty() ? std::vector<double>(batch.size(), 1.0)
                                                   : inclusion_probs;
    finalize_plan(plan, l.n_rows);
    return plan;
}

MiniBatchPlan subgraph_plan(const SparseMatrix& l, const std::vector<Index>& batch, Index depth,
                            const std::vector<double>& inclusion_probs) {
    if (batch.empty()) throw EmptyBatchError("subgraph plan needs a nonempty batch");
    MiniBatchPlan plan;
    plan.strategy = Strategy::subgraph;
    plan.node_sets.assign(static_cast<std::size_t>(depth) + 1, batch);
    plan.layers.resize(static_cast<std::size_t>(depth));
    auto r = restrict_matrix(l, batch, batch);
    for (auto& layer : plan.layers) layer.fresh = r.matrix;
    plan.inclusion_probs = inclusion_probs.empty() ? std::vector<double>(batch.size(), 1.0)
                                                   : inclusion_probs;
    finalize_plan(plan, l.n_rows);
    return plan;
}

void CheckpointState::rebuild_position() {
    position.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) position[nodes[i]] = static_cast<Index>(i);
}

std::pair<MiniBatchPlan, CheckpointState> mvs_checkpoint(const SparseMatrix& l,
                                                         const std::vector<Index>& candidates,
                                                         double gamma, Index inner_len,
                                                         Index depth, Rng& rng) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidProbabilityError("gamma must lie in (0,1]");
    const Index n = static_cast<Index>(candidates.size());
    Index size = static_cast<Index>(std::llround(gamma * static_cast<double>(n)));
    size = std::max<Index>(1, std::min(size, n));

    CheckpointState state;
    state.gamma = gamma;
    state.inner_len = inner_len;
    state.inner_step = 1;  // the checkpoint itself counts as iteration k = 1
    state.nodes = pick_ids(candidates, rng.sample_without_replacement(n, size));
    state.grad_norms.assign(state.nodes.size(), 0.0);
    state.freshness.assign(state.nodes.size(), -1);
    state.cache_ready = false;
    state.rebuild_position();

    MiniBatchPlan plan = exact_plan(l, state.nodes, depth);
    plan.strategy = Strategy::mvs;
    plan.inclusion_probs.assign(state.nodes.size(), gamma);
    return {std::move(plan), std::move(state)};
}

void update_grad_cache(CheckpointState& state, const std::vector<Index>& nodes,
                       const std::vector<double>& norms, long step) {
    if (nodes.size() != norms.size()) throw ShapeMismatchError("grad cache: size mismatch");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto it = state.position.find(nodes[i]);
        if (it == state.position.end()) {
            throw IndexOutOfRangeError("grad cache: node outside the checkpoint set");
        }
        state.grad_norms[static_cast<std::size_t>(it->second)] = norms[i];
        state.freshness[static_cast<std::size_t>(it->second)] = step;
    }
    state.cache_ready = true;
}

MiniBatchPlan importance_plan(const SparseMatrix& l, const std::vector<Index>& batch,
                              const std::vector<double>& probs_of_batch, bool exact_inference,
                              Index depth, Strategy tag) {
    MiniBatchPlan plan;
    if (exact_inference) {
        plan = exact_plan(l, batch, depth);
    } else {
        plan.node_sets.assign(static_cast<std::size_t>(depth) + 1, batch);
        plan.layers.resize(static_cast<std::size_t>(depth));
        auto fresh = restrict_matrix(l, batch, batch);

        // Stale complement: every stored L entry of a batch row whose column
        // is not in the batch, indexed globally against the history store.
        std::set<Index> in_batch(batch.begin(), batch.end());
        SparseMatrix stale(static_cast<Index>(batch.size()), l.n_cols);
        for (std::size_t r = 0; r < batch.size(); ++r) {
            const Index gi = batch[r];
            for (Index k = l.row_ptr[static_cast<std::size_t>(gi)]; k < l.row_ptr[static_cast<std::size_t>(gi) + 1]; ++k) {
                const Index gj = l.col_idx[static_cast<std::size_t>(k)];
                if (in_batch.count(gj)) continue;
                stale.col_idx.push_back(gj);
                stale.values.push_back(l.values[static_cast<std::size_t>(k)]);
            }
            stale.row_ptr[r + 1] = stale.nnz();
        }
        const bool has_stale = stale.nnz() > 0;
        for (auto& layer : plan.layers) {
            layer.fresh = fresh.matrix;
            layer.stale = stale;
            layer.has_stale = has_stale;
        }
    }
    plan.strategy = tag;
    plan.inclusion_probs = probs_of_batch;
    finalize_plan(plan, l.n_rows);
    return plan;
}

MiniBatchPlan mvs_minibatch(const CheckpointState& state, const SparseMatrix& l, Index batch_size,
                            bool exact_inference, Index depth, Rng& rng) {
    if (!state.cache_ready) throw StaleCacheError("gradient cache never initialized");
    if (batch_size > static_cast<Index>(state.nodes.size())) {
        throw BatchTooLargeError("B exceeds the checkpoint set size");
    }
    const ProbabilityVector pv = optimal_probs(state.grad_norms, batch_size);

    std::vector<Index> batch;
    std::vector<double> probs;
    for (int attempt = 0; attempt < 16; ++attempt) {
        batch.clear();
        probs.clear();
        for (std::size_t i = 0; i < state.nodes.size(); ++i) {
            if (rng.bernoulli(pv.probs[i])) {
                batch.push_back(state.nodes[i]);
                probs.push_back(pv.probs[i]);
            }
        }
        if (!batch.empty()) break;
    }
    if (batch.empty()) throw EmptyBatchError("all Bernoulli draws failed 16 times");

    return importance_plan(l, batch, probs, exact_inference, depth, Strategy::mvs);
}

} // namespace mvsgnn
