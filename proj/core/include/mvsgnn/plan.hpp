#pragma once

#include <string>
#include <vector>

#include "mvsgnn/sparse.hpp"

namespace mvsgnn {

enum class Strategy { uniform, node_wise, layer_wise, subgraph, mvs, mvs_bandit };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// One layer of a mini-batch computation. `fresh` maps the previous layer's
// computed embeddings into this layer's rows; `stale` (optional) carries the
// remaining neighbor mass against globally indexed history embeddings.
struct PlanLayer {
    SparseMatrix fresh;          // rows: node_sets[l], cols: node_sets[l-1]
    SparseMatrix stale;          // rows: node_sets[l], cols: global (n_cols = N)
    bool has_stale = false;
};

// Per-iteration sampling plan for an L-layer pass.
//
// node_sets[l] lists the global ids whose embeddings exist at layer l
// (node_sets[0] are input-feature rows, node_sets[L] the loss nodes).
// Layer dims chain: layers[l-1].fresh is |node_sets[l]| x |node_sets[l-1]|.
// Every layer's row set is contained in the layer below, so self rows are
// always available for concat aggregation.
struct MiniBatchPlan {
    std::vector<std::vector<Index>> node_sets;  // size depth()+1
    std::vector<PlanLayer> layers;              // layers[l-1] computes layer l
    std::vector<std::vector<Index>> self_pos;   // per layer: row r -> index in node_sets[l-1]
    std::vector<double> inclusion_probs;        // per batch node, in (0,1]
    Strategy strategy = Strategy::uniform;

    Index depth() const { return static_cast<Index>(layers.size()); }
    const std::vector<Index>& batch_nodes() const { return node_sets.back(); }

    // Chaining, index-map consistency and probability range.
    void validate(Index n_total) const;
};

// Fills self_pos and checks shape chaining. Call after assembling layers.
void finalize_plan(MiniBatchPlan& plan, Index n_total);

// All-neighbor plan: node_sets grow by the full neighborhood closure and each
// fresh matrix carries every stored entry of L for its rows. No stale parts,
// no scaling. Forward on this plan reproduces the exact embeddings of the
// batch nodes.
MiniBatchPlan exact_plan(const SparseMatrix& l, const std::vector<Index>& batch, Index depth);

// For every layer with a stale part: the fresh support (mapped to global
// ids) and the stale support must be disjoint and jointly cover the nonzero
// entries of L on that layer's rows. Throws CoverageGapError. Layers without
// stale parts are sampled estimators and are not checked.
void validate_plan_coverage(const SparseMatrix& l, const MiniBatchPlan& plan);

} // namespace mvsgnn
