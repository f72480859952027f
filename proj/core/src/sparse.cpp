#include "mvsgnn/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvsgnn/errors.hpp"

namespace mvsgnn {

double SparseMatrix::at(Index i, Index j) const {
    const Index lo = row_ptr[static_cast<std::size_t>(i)];
    const Index hi = row_ptr[static_cast<std::size_t>(i) + 1];
    const auto first = col_idx.begin() + lo;
    const auto last = col_idx.begin() + hi;
    const auto it = std::lower_bound(first, last, j);
    if (it != last && *it == j) {
        return values[static_cast<std::size_t>(it - col_idx.begin())];
    }
    return 0.0;
}

void SparseMatrix::validate() const {
    if (static_cast<Index>(row_ptr.size()) != n_rows + 1 || row_ptr.front() != 0 ||
        row_ptr.back() != nnz()) {
        throw ShapeMismatchError("CSR row_ptr malformed");
    }
    for (Index i = 0; i < n_rows; ++i) {
        const Index lo = row_ptr[static_cast<std::size_t>(i)];
        const Index hi = row_ptr[static_cast<std::size_t>(i) + 1];
        if (hi < lo) throw ShapeMismatchError("CSR row_ptr decreasing");
        for (Index k = lo; k < hi; ++k) {
            const Index c = col_idx[static_cast<std::size_t>(k)];
            if (c < 0 || c >= n_cols) throw IndexOutOfRangeError("CSR column out of range");
            if (k > lo && col_idx[static_cast<std::size_t>(k - 1)] >= c) {
                throw DuplicateEntryError("CSR columns not strictly increasing in row " +
                                          std::to_string(i));
            }
            if (!std::isfinite(values[static_cast<std::size_t>(k)])) {
                throw ShapeMismatchError("CSR value not finite");
            }
        }
    }
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix out(n_rows, n_cols);
    for (Index i = 0; i < n_rows; ++i) {
        for (Index k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            out(i, col_idx[static_cast<std::size_t>(k)]) = values[static_cast<std::size_t>(k)];
        }
    }
    return out;
}

SparseMatrix build_csr(const std::vector<Edge>& edges, Index n_rows, Index n_cols) {
    for (const Edge& e : edges) {
        if (e.row < 0 || e.row >= n_rows || e.col < 0 || e.col >= n_cols) {
            throw IndexOutOfRangeError("edge (" + std::to_string(e.row) + "," +
                                       std::to_string(e.col) + ") out of range");
        }
    }
    std::vector<Index> order(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) order[i] = static_cast<Index>(i);
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        const Edge& ea = edges[static_cast<std::size_t>(a)];
        const Edge& eb = edges[static_cast<std::size_t>(b)];
        return std::tie(ea.row, ea.col) < std::tie(eb.row, eb.col);
    });

    SparseMatrix m(n_rows, n_cols);
    m.col_idx.reserve(edges.size());
    m.values.reserve(edges.size());
    Index prev_row = -1, prev_col = -1;
    for (Index idx : order) {
        const Edge& e = edges[static_cast<std::size_t>(idx)];
        if (e.row == prev_row && e.col == prev_col) {
            throw DuplicateEntryError("duplicate edge (" + std::to_string(e.row) + "," +
                                      std::to_string(e.col) + ")");
        }
        m.col_idx.push_back(e.col);
        m.values.push_back(e.value);
        m.row_ptr[static_cast<std::size_t>(e.row) + 1]++;
        prev_row = e.row;
        prev_col = e.col;
    }
    for (Index i = 0; i < n_rows; ++i) {
        m.row_ptr[static_cast<std::size_t>(i) + 1] += m.row_ptr[static_cast<std::size_t>(i)];
    }
    return m;
}

SparseMatrix normalize_laplacian(const SparseMatrix& adj, const LaplacianConfig& cfg) {
    const Index n = adj.n_rows;
    if (adj.n_cols != n) throw DimensionMismatchError("adjacency must be square");

    std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
    for (Index i = 0; i < n; ++i) {
        degree[static_cast<std::size_t>(i)] =
            static_cast<double>(adj.row_nnz(i)) + (cfg.add_self_loops ? 1.0 : 0.0);
        if (degree[static_cast<std::size_t>(i)] == 0.0) {
            throw IsolatedNodeError("node " + std::to_string(i) +
                                    " has degree 0 and self loops are disabled");
        }
    }

    SparseMatrix out(n, n);
    out.col_idx.reserve(adj.col_idx.size() + (cfg.add_self_loops ? static_cast<std::size_t>(n) : 0));
    out.values.reserve(out.col_idx.capacity());
    for (Index i = 0; i < n; ++i) {
        const Index lo = adj.row_ptr[static_cast<std::size_t>(i)];
        const Index hi = adj.row_ptr[static_cast<std::size_t>(i) + 1];
        bool loop_emitted = !cfg.add_self_loops;
        auto emit = [&](Index j) {
            double v;
            if (cfg.norm_kind == NormKind::rw) {
                v = 1.0 / degree[static_cast<std::size_t>(i)];
            } else {
                v = 1.0 / std::sqrt(degree[static_cast<std::size_t>(i)] *
                                    degree[static_cast<std::size_t>(j)]);
            }
            out.col_idx.push_back(j);
            out.values.push_back(v);
        };
        for (Index k = lo; k < hi; ++k) {
            const Index j = adj.col_idx[static_cast<std::size_t>(k)];
            if (!loop_emitted && j > i) {
                emit(i);
                loop_emitted = true;
            }
            if (j == i) throw DuplicateEntryError("raw adjacency must have an empty diagonal");
            emit(j);
        }
        if (!loop_emitted) emit(i);
        out.row_ptr[static_cast<std::size_t>(i) + 1] = out.nnz();
    }
    return out;
}

DenseMatrix spmm(const SparseMatrix& l, const DenseMatrix& h) {
    if (l.n_cols != h.rows) throw DimensionMismatchError("spmm: L.n_cols != H.rows");
    DenseMatrix out(l.n_rows, h.cols);
    for (Index i = 0; i < l.n_rows; ++i) {
        double* oi = out.row_ptr(i);
        for (Index k = l.row_ptr[static_cast<std::size_t>(i)]; k < l.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const double v = l.values[static_cast<std::size_t>(k)];
            const double* hj = h.row_ptr(l.col_idx[static_cast<std::size_t>(k)]);
            for (Index f = 0; f < h.cols; ++f) oi[f] += v * hj[f];
        }
    }
    return out;
}

void spmm_transpose_accumulate(const SparseMatrix& l, const DenseMatrix& da, DenseMatrix& out) {
    if (l.n_rows != da.rows || out.rows != l.n_cols || out.cols != da.cols) {
        throw DimensionMismatchError("spmm_transpose_accumulate: shape mismatch");
    }
    for (Index i = 0; i < l.n_rows; ++i) {
        const double* di = da.row_ptr(i);
        for (Index k = l.row_ptr[static_cast<std::size_t>(i)]; k < l.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const double v = l.values[static_cast<std::size_t>(k)];
            double* oj = out.row_ptr(l.col_idx[static_cast<std::size_t>(k)]);
            for (Index f = 0; f < da.cols; ++f) oj[f] += v * di[f];
        }
    }
}

namespace {

void check_unique_in_range(const std::vector<Index>& ids, Index bound, const char* what) {
    std::vector<Index> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] < 0 || sorted[i] >= bound) {
            throw IndexOutOfRangeError(std::string(what) + " id out of range");
        }
        if (i > 0 && sorted[i] == sorted[i - 1]) {
            throw DuplicateIdError(std::string(what) + " ids contain duplicates");
        }
    }
}

} // namespace

Restriction restrict_matrix(const SparseMatrix& l,
                            const std::vector<Index>& rows,
                            const std::vector<Index>& cols,
                            const EntryScale& scale) {
    check_unique_in_range(rows, l.n_rows, "row");
    check_unique_in_range(cols, l.n_cols, "col");

    std::vector<Index> col_pos(static_cast<std::size_t>(l.n_cols), -1);
    for (std::size_t b = 0; b < cols.size(); ++b) {
        col_pos[static_cast<std::size_t>(cols[b])] = static_cast<Index>(b);
    }

    Restriction r;
    r.row_ids = rows;
    r.col_ids = cols;
    r.matrix = SparseMatrix(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));

    // Entries within a row come out ordered by local column id.
    std::vector<std::pair<Index, double>> row_buf;
    for (std::size_t a = 0; a < rows.size(); ++a) {
        row_buf.clear();
        const Index gi = rows[a];
        for (Index k = l.row_ptr[static_cast<std::size_t>(gi)]; k < l.row_ptr[static_cast<std::size_t>(gi) + 1]; ++k) {
            const Index lb = col_pos[static_cast<std::size_t>(l.col_idx[static_cast<std::size_t>(k)])];
            if (lb < 0) continue;
            const double raw = l.values[static_cast<std::size_t>(k)];
            row_buf.emplace_back(lb, scale ? scale(raw) : raw);
        }
        std::sort(row_buf.begin(), row_buf.end());
        for (const auto& [c, v] : row_buf) {
            r.matrix.col_idx.push_back(c);
            r.matrix.values.push_back(v);
        }
        r.matrix.row_ptr[a + 1] = r.matrix.nnz();
    }
    return r;
}

} // namespace mvsgnn
