#include "mvsgnn/history.hpp"

#include <algorithm>
#include <unordered_map>

#include "mvsgnn/errors.hpp"
#include "mvsgnn/gcn.hpp"
#include "mvsgnn/plan.hpp"

namespace mvsgnn {

const DenseMatrix& HistoryStore::layer(Index l) const {
    if (l == 0) {
        if (!features) throw MissingHistoryError("history store has no feature view");
        return *features;
    }
    if (l < 1 || l > num_history_layers()) {
        throw IndexOutOfRangeError("history layer out of range");
    }
    return layers[static_cast<std::size_t>(l - 1)];
}

DenseMatrix& HistoryStore::mutable_layer(Index l) {
    if (l < 1 || l > num_history_layers()) {
        throw IndexOutOfRangeError("history layer out of range");
    }
    return layers[static_cast<std::size_t>(l - 1)];
}

void HistoryStore::write_rows(Index l, const std::vector<Index>& ids, const DenseMatrix& values) {
    DenseMatrix& dst = mutable_layer(l);
    if (values.rows != static_cast<Index>(ids.size()) || values.cols != dst.cols) {
        throw ShapeMismatchError("history write: shape mismatch");
    }
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const Index id = ids[r];
        if (id < 0 || id >= dst.rows) throw IndexOutOfRangeError("history write: node id out of range");
        const double* src = values.row_ptr(static_cast<Index>(r));
        double* d = dst.row_ptr(id);
        for (Index j = 0; j < dst.cols; ++j) d[j] = src[j];
    }
}

HistoryStore make_history(const DenseMatrix& features, const std::vector<Index>& dims) {
    HistoryStore s;
    s.features = &features;
    const Index n = features.rows;
    // History exists for layers 1..L-1; the final layer is never aggregated.
    for (std::size_t l = 1; l + 1 < dims.size(); ++l) {
        s.layers.emplace_back(n, dims[l]);
    }
    s.freshness.assign(static_cast<std::size_t>(n), -1);
    return s;
}

DenseMatrix combined_aggregate(const SparseMatrix& fresh, const DenseMatrix& h_fresh,
                               const SparseMatrix& stale, const HistoryStore& store,
                               Index layer) {
    DenseMatrix agg = spmm(fresh, h_fresh);
    if (stale.nnz() > 0) {
        const DenseMatrix& h_bar = store.layer(layer - 1);
        if (stale.n_cols != h_bar.rows) {
            throw DimensionMismatchError("combined_aggregate: stale cols != history rows");
        }
        DenseMatrix stale_part = spmm(stale, h_bar);
        if (!stale_part.same_shape(agg)) {
            throw DimensionMismatchError("combined_aggregate: fresh/stale row mismatch");
        }
        axpy(agg, 1.0, stale_part);
    }
    return agg;
}

void refresh_from_tape(HistoryStore& store, const MiniBatchPlan& plan, const ForwardTape& tape,
                       long step) {
    const Index hl = store.num_history_layers();
    std::unordered_map<Index, Index> touched;  // node -> number of layers rewritten
    for (Index l = 1; l <= std::min(hl, plan.depth()); ++l) {
        const auto& ids = plan.node_sets[static_cast<std::size_t>(l)];
        store.write_rows(l, ids, tape.h[static_cast<std::size_t>(l)]);
        for (Index id : ids) touched[id] += 1;
    }
    const Index layers_written = std::min(hl, plan.depth());
    for (const auto& [id, count] : touched) {
        if (count == layers_written) {
            store.freshness[static_cast<std::size_t>(id)] = step;
        }
    }
}

StalenessReport staleness_report(const HistoryStore& store, long current_step,
                                 const std::vector<DenseMatrix>* exact_h,
                                 const std::vector<DenseMatrix>* weights) {
    StalenessReport rep;
    double sum = 0.0;
    for (long f : store.freshness) {
        const long stale = f < 0 ? current_step + 1 : current_step - f;
        rep.max_staleness = std::max(rep.max_staleness, stale);
        sum += static_cast<double>(stale);
    }
    if (!store.freshness.empty()) {
        rep.mean_staleness = sum / static_cast<double>(store.freshness.size());
    }

    if (exact_h && weights) {
        for (Index l = 1; l <= store.num_history_layers(); ++l) {
            const DenseMatrix& exact = (*exact_h)[static_cast<std::size_t>(l)];
            const DenseMatrix& cached = store.layer(l);
            const DenseMatrix& w_next = (*weights)[static_cast<std::size_t>(l)];  // W^(l+1)
            if (!exact.same_shape(cached)) {
                throw ShapeMismatchError("staleness_report: exact embedding shape mismatch");
            }
            // Row-wise (H - Hbar) W^(l+1); with concat weights only the
            // aggregate half of W applies to history.
            const Index f = cached.cols;
            const Index out_cols = w_next.cols;
            const Index w_row_offset = w_next.rows == 2 * f ? f : 0;
            double worst = 0.0;
            std::vector<double> row(static_cast<std::size_t>(out_cols));
            for (Index i = 0; i < cached.rows; ++i) {
                std::fill(row.begin(), row.end(), 0.0);
                const double* he = exact.row_ptr(i);
                const double* hb = cached.row_ptr(i);
                for (Index k = 0; k < f; ++k) {
                    const double d = he[k] - hb[k];
                    if (d == 0.0) continue;
                    const double* wr = w_next.row_ptr(w_row_offset + k);
                    for (Index c = 0; c < out_cols; ++c) row[static_cast<std::size_t>(c)] += d * wr[c];
                }
                double norm_sq = 0.0;
                for (double v : row) norm_sq += v * v;
                worst = std::max(worst, norm_sq);
            }
            rep.per_layer_delta.push_back(std::sqrt(worst));
        }
    }
    return rep;
}

} // namespace mvsgnn
