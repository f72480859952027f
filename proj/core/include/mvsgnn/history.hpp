#pragma once

#include <vector>

#include "mvsgnn/dense.hpp"
#include "mvsgnn/sparse.hpp"

namespace mvsgnn {

struct ForwardTape;      // gcn.hpp
struct MiniBatchPlan;    // plan.hpp

enum class HistoryInit { zeros, full_forward };

// Stale embedding store. h_bar(l) caches an N x F_l snapshot of layer-l
// activations for l = 1..L-1; layer 0 is the input features and is always
// exact. Freshness is tracked per node: a node counts as refreshed only when
// all of its history layers were rewritten together.
struct HistoryStore {
    std::vector<DenseMatrix> layers;   // index l-1 holds layer l, l in 1..L-1
    std::vector<long> freshness;       // per node; -1 = never refreshed
    const DenseMatrix* features = nullptr;  // layer-0 embeddings (not owned)

    Index num_nodes() const { return features ? features->rows : 0; }
    Index num_history_layers() const { return static_cast<Index>(layers.size()); }

    const DenseMatrix& layer(Index l) const;  // l in 0..L-1; l = 0 -> features
    DenseMatrix& mutable_layer(Index l);      // l in 1..L-1

    // Overwrite the given rows of layer l. Other rows stay bitwise unchanged.
    void write_rows(Index l, const std::vector<Index>& ids, const DenseMatrix& values);
};

// Zero-initialized store sized from the layer dims (F_1..F_{L-1}).
HistoryStore make_history(const DenseMatrix& features, const std::vector<Index>& dims);

// fresh * h_fresh plus, when `stale` is nonempty, stale * h_bar(layer-1).
// This is the bracketed aggregate of a mini-batch layer before the weight
// multiply. Fresh and stale column supports must be disjoint per row.
DenseMatrix combined_aggregate(const SparseMatrix& fresh, const DenseMatrix& h_fresh,
                               const SparseMatrix& stale, const HistoryStore& store,
                               Index layer);

// Copies each layer's tape rows into the store and advances freshness for
// nodes refreshed at every history layer.
void refresh_from_tape(HistoryStore& store, const MiniBatchPlan& plan, const ForwardTape& tape,
                       long step);

struct StalenessReport {
    long max_staleness = 0;
    double mean_staleness = 0.0;
    // delta_gamma[l-1] = max_i ||(H_exact(l) - h_bar(l))_i W^(l+1)||_2,
    // for history layers l = 1..L-1. Empty when exact embeddings are not
    // supplied.
    std::vector<double> per_layer_delta;
};

// exact_h holds exact activations per layer (index l for layer l, l >= 1);
// weights are W^(1..L). Pass nullptr to skip the delta computation.
StalenessReport staleness_report(const HistoryStore& store, long current_step,
                                 const std::vector<DenseMatrix>* exact_h,
                                 const std::vector<DenseMatrix>* weights);

} // namespace mvsgnn
