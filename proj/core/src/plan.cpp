#include "mvsgnn/plan.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "mvsgnn/errors.hpp"

namespace mvsgnn {

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::uniform: return "uniform";
        case Strategy::node_wise: return "node_wise";
        case Strategy::layer_wise: return "layer_wise";
        case Strategy::subgraph: return "subgraph";
        case Strategy::mvs: return "mvs";
        case Strategy::mvs_bandit: return "mvs_bandit";
    }
    return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "uniform") return Strategy::uniform;
    if (name == "node_wise") return Strategy::node_wise;
    if (name == "layer_wise") return Strategy::layer_wise;
    if (name == "subgraph") return Strategy::subgraph;
    if (name == "mvs") return Strategy::mvs;
    if (name == "mvs_bandit") return Strategy::mvs_bandit;
    throw ConfigError("unknown strategy '" + name + "'");
}

void finalize_plan(MiniBatchPlan& plan, Index n_total) {
    const std::size_t depth = plan.layers.size();
    if (plan.node_sets.size() != depth + 1) {
        throw ShapeMismatchError("plan: node_sets must have depth+1 levels");
    }
    plan.self_pos.assign(depth, {});
    std::unordered_map<Index, Index> pos;
    for (std::size_t l = 1; l <= depth; ++l) {
        const auto& below = plan.node_sets[l - 1];
        pos.clear();
        for (std::size_t i = 0; i < below.size(); ++i) pos[below[i]] = static_cast<Index>(i);
        auto& sp = plan.self_pos[l - 1];
        sp.resize(plan.node_sets[l].size(), -1);
        for (std::size_t r = 0; r < plan.node_sets[l].size(); ++r) {
            const auto it = pos.find(plan.node_sets[l][r]);
            if (it != pos.end()) sp[r] = it->second;
        }
    }
    plan.validate(n_total);
}

void MiniBatchPlan::validate(Index n_total) const {
    const Index d = depth();
    if (d < 1) throw ShapeMismatchError("plan: depth must be >= 1");
    if (batch_nodes().empty()) throw EmptyBatchError("plan: empty batch");
    if (inclusion_probs.size() != batch_nodes().size()) {
        throw ShapeMismatchError("plan: inclusion_probs size mismatch");
    }
    for (double p : inclusion_probs) {
        if (!(p > 0.0 && p <= 1.0)) throw InvalidProbabilityError("plan: p outside (0,1]");
    }
    for (Index l = 1; l <= d; ++l) {
        const auto& layer = layers[static_cast<std::size_t>(l - 1)];
        const Index rows = static_cast<Index>(node_sets[static_cast<std::size_t>(l)].size());
        const Index cols = static_cast<Index>(node_sets[static_cast<std::size_t>(l - 1)].size());
        if (layer.fresh.n_rows != rows || layer.fresh.n_cols != cols) {
            throw ShapeMismatchError("plan: fresh Laplacian shape breaks the layer chain");
        }
        if (layer.has_stale && (layer.stale.n_rows != rows || layer.stale.n_cols != n_total)) {
            throw ShapeMismatchError("plan: stale Laplacian shape mismatch");
        }
        for (Index id : node_sets[static_cast<std::size_t>(l)]) {
            if (id < 0 || id >= n_total) throw IndexOutOfRangeError("plan: node id out of range");
        }
    }
    for (Index id : node_sets[0]) {
        if (id < 0 || id >= n_total) throw IndexOutOfRangeError("plan: node id out of range");
    }
}

MiniBatchPlan exact_plan(const SparseMatrix& l, const std::vector<Index>& batch, Index depth) {
    MiniBatchPlan plan;
    plan.strategy = Strategy::uniform;
    plan.node_sets.assign(static_cast<std::size_t>(depth) + 1, {});
    plan.layers.resize(static_cast<std::size_t>(depth));
    plan.node_sets[static_cast<std::size_t>(depth)] = batch;

    // Closure downward: each level adds the full neighborhoods of the level
    // above, so every row's support is present in the level below.
    for (Index lev = depth; lev >= 1; --lev) {
        const auto& rows = plan.node_sets[static_cast<std::size_t>(lev)];
        std::set<Index> below(rows.begin(), rows.end());
        for (Index gi : rows) {
            for (Index k = l.row_ptr[static_cast<std::size_t>(gi)]; k < l.row_ptr[static_cast<std::size_t>(gi) + 1]; ++k) {
                below.insert(l.col_idx[static_cast<std::size_t>(k)]);
            }
        }
        plan.node_sets[static_cast<std::size_t>(lev - 1)].assign(below.begin(), below.end());
        auto r = restrict_matrix(l, rows, plan.node_sets[static_cast<std::size_t>(lev - 1)]);
        plan.layers[static_cast<std::size_t>(lev - 1)].fresh = std::move(r.matrix);
    }
    plan.inclusion_probs.assign(batch.size(), 1.0);
    finalize_plan(plan, l.n_rows);
    return plan;
}

void validate_plan_coverage(const SparseMatrix& l, const MiniBatchPlan& plan) {
    for (Index lev = 1; lev <= plan.depth(); ++lev) {
        const auto& layer = plan.layers[static_cast<std::size_t>(lev - 1)];
        if (!layer.has_stale) continue;
        const auto& rows = plan.node_sets[static_cast<std::size_t>(lev)];
        const auto& cols = plan.node_sets[static_cast<std::size_t>(lev - 1)];
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::set<Index> covered;
            for (Index k = layer.fresh.row_ptr[r]; k < layer.fresh.row_ptr[r + 1]; ++k) {
                covered.insert(cols[static_cast<std::size_t>(layer.fresh.col_idx[static_cast<std::size_t>(k)])]);
            }
            for (Index k = layer.stale.row_ptr[r]; k < layer.stale.row_ptr[r + 1]; ++k) {
                const Index g = layer.stale.col_idx[static_cast<std::size_t>(k)];
                if (!covered.insert(g).second) {
                    throw CoverageGapError("fresh and stale supports overlap at column " +
                                           std::to_string(g));
                }
            }
            const Index gi = rows[r];
            for (Index k = l.row_ptr[static_cast<std::size_t>(gi)]; k < l.row_ptr[static_cast<std::size_t>(gi) + 1]; ++k) {
                if (covered.find(l.col_idx[static_cast<std::size_t>(k)]) == covered.end()) {
                    throw CoverageGapError("row " + std::to_string(gi) +
                                           " has an uncovered neighbor");
                }
            }
        }
    }
}

} // namespace mvsgnn
