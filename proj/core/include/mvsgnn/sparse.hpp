#pragma once

#include <functional>
#include <tuple>
#include <vector>

#include "mvsgnn/dense.hpp"

namespace mvsgnn {

// CSR real matrix. Invariants, enforced by build_csr and checked by
// validate():
//   - row_ptr non-decreasing, row_ptr[0] = 0, row_ptr[n_rows] = nnz
//   - within each row, col_idx strictly increasing, all < n_cols
//   - values finite
struct SparseMatrix {
    Index n_rows = 0;
    Index n_cols = 0;
    std::vector<Index> row_ptr;   // length n_rows + 1
    std::vector<Index> col_idx;   // length nnz
    std::vector<double> values;   // length nnz

    SparseMatrix() : row_ptr(1, 0) {}
    SparseMatrix(Index r, Index c) : n_rows(r), n_cols(c), row_ptr(static_cast<std::size_t>(r) + 1, 0) {}

    Index nnz() const { return static_cast<Index>(col_idx.size()); }
    Index row_nnz(Index i) const { return row_ptr[static_cast<std::size_t>(i) + 1] - row_ptr[static_cast<std::size_t>(i)]; }

    // Stored value at (i, j), or 0 if absent.
    double at(Index i, Index j) const;

    void validate() const;

    DenseMatrix to_dense() const;
};

struct Edge {
    Index row;
    Index col;
    double value;
};

enum class NormKind { sym, rw };

struct LaplacianConfig {
    NormKind norm_kind = NormKind::rw;
    bool add_self_loops = true;
};

// Canonical CSR from an (unordered) edge list. Duplicate (row, col) pairs
// and out-of-range indices are errors.
SparseMatrix build_csr(const std::vector<Edge>& edges, Index n_rows, Index n_cols);

// Normalized Laplacian of a symmetric binary adjacency:
//   rw  -> D^{-1} A', every row sums to 1
//   sym -> entry (i,j) = 1 / sqrt(d_i d_j)
// where A' = A + I when add_self_loops and degrees are taken over A'.
// A degree-0 row without self loops is an error.
SparseMatrix normalize_laplacian(const SparseMatrix& adj, const LaplacianConfig& cfg);

// out = L * H, rows accumulated in CSR storage order (deterministic).
DenseMatrix spmm(const SparseMatrix& l, const DenseMatrix& h);

// out[j] += L^T rows: dH[col] += v * dA[row] for every stored (row, col).
// Used by backward passes; out must be preallocated (n_cols x F).
void spmm_transpose_accumulate(const SparseMatrix& l, const DenseMatrix& da, DenseMatrix& out);

struct Restriction {
    SparseMatrix matrix;            // |rows| x |cols|
    std::vector<Index> row_ids;     // local row a -> global rows[a]
    std::vector<Index> col_ids;     // local col b -> global cols[b]
};

using EntryScale = std::function<double(double)>;

// Submatrix on (rows x cols) with an optional per-entry value transform.
// Ids must be unique and in range; index maps recover global ids.
Restriction restrict_matrix(const SparseMatrix& l,
                            const std::vector<Index>& rows,
                            const std::vector<Index>& cols,
                            const EntryScale& scale = nullptr);

} // namespace mvsgnn
