#include <doctest.h>

#include "mvsgnn/errors.hpp"
#include "mvsgnn/rng.hpp"
#include "mvsgnn/sparse.hpp"
#include "oracles.hpp"

using namespace mvsgnn;

namespace {

SparseMatrix triangle_adj() {
    return build_csr({{0, 1, 1}, {1, 0, 1}, {0, 2, 1}, {2, 0, 1}, {1, 2, 1}, {2, 1, 1}}, 3, 3);
}

SparseMatrix random_sparse(Index n, double density, Rng& rng) {
    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (rng.bernoulli(density)) edges.push_back({i, j, rng.normal()});
        }
    }
    return build_csr(edges, n, n);
}

} // namespace

TEST_CASE("build_csr: empty matrix") {
    const SparseMatrix m = build_csr({}, 2, 2);
    CHECK(m.nnz() == 0);
    CHECK(m.row_ptr == std::vector<Index>{0, 0, 0});
    m.validate();
}

TEST_CASE("build_csr: single undirected edge") {
    const SparseMatrix m = build_csr({{0, 1, 1.0}, {1, 0, 1.0}}, 2, 2);
    CHECK(m.nnz() == 2);
    CHECK(m.at(0, 1) == 1.0);
    CHECK(m.at(1, 0) == 1.0);
    CHECK(m.at(0, 0) == 0.0);
}

TEST_CASE("build_csr: unsorted input matches dense construction") {
    Rng rng(11);
    std::vector<Edge> edges;
    for (int k = 0; k < 30; ++k) {
        const Index i = static_cast<Index>(rng.uniform_below(8));
        const Index j = static_cast<Index>(rng.uniform_below(8));
        bool dup = false;
        for (const auto& e : edges) dup = dup || (e.row == i && e.col == j);
        if (!dup) edges.push_back({i, j, rng.normal()});
    }
    const SparseMatrix m = build_csr(edges, 8, 8);
    m.validate();
    const DenseMatrix want = oracle::dense_from_edges(edges, 8, 8);
    CHECK(oracle::max_abs_diff(m.to_dense(), want) == 0.0);
}

TEST_CASE("build_csr: errors") {
    CHECK_THROWS_AS(build_csr({{0, 5, 1.0}}, 2, 2), IndexOutOfRangeError);
    CHECK_THROWS_AS(build_csr({{0, 1, 1.0}, {0, 1, 2.0}}, 2, 2), DuplicateEntryError);
}

TEST_CASE("normalize_laplacian: triangle rw without self loops") {
    LaplacianConfig cfg{NormKind::rw, false};
    const SparseMatrix l = normalize_laplacian(triangle_adj(), cfg);
    for (double v : l.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
    for (Index i = 0; i < 3; ++i) {
        double row_sum = 0.0;
        for (Index k = l.row_ptr[i]; k < l.row_ptr[i + 1]; ++k) row_sum += l.values[k];
        CHECK(std::abs(row_sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("normalize_laplacian: single edge sym") {
    const SparseMatrix adj = build_csr({{0, 1, 1.0}, {1, 0, 1.0}}, 2, 2);
    const SparseMatrix l = normalize_laplacian(adj, {NormKind::sym, false});
    CHECK(l.at(0, 1) == doctest::Approx(1.0));
    CHECK(l.at(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("normalize_laplacian: path with self loops matches dense oracle") {
    const SparseMatrix adj = build_csr({{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 1, 1}}, 3, 3);
    const SparseMatrix l = normalize_laplacian(adj, {NormKind::rw, true});
    CHECK(l.at(1, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(l.at(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(l.at(1, 2) == doctest::Approx(1.0 / 3.0));
    const DenseMatrix want = oracle::dense_laplacian(adj.to_dense(), true, true);
    CHECK(oracle::max_abs_diff(l.to_dense(), want) <= 1e-15);
}

TEST_CASE("normalize_laplacian: sym matches dense oracle on random graphs") {
    Rng rng(5);
    for (int t = 0; t < 5; ++t) {
        const Index n = 6 + t;
        std::vector<Edge> edges;
        for (Index i = 0; i < n; ++i) {
            for (Index j = i + 1; j < n; ++j) {
                if (rng.bernoulli(0.4)) {
                    edges.push_back({i, j, 1.0});
                    edges.push_back({j, i, 1.0});
                }
            }
        }
        const SparseMatrix adj = build_csr(edges, n, n);
        const SparseMatrix l = normalize_laplacian(adj, {NormKind::sym, true});
        const DenseMatrix want = oracle::dense_laplacian(adj.to_dense(), false, true);
        CHECK(oracle::max_abs_diff(l.to_dense(), want) <= 1e-14);
    }
}

TEST_CASE("normalize_laplacian: isolated node") {
    const SparseMatrix adj = build_csr({{0, 1, 1}, {1, 0, 1}}, 3, 3);  // node 2 isolated
    CHECK_THROWS_AS(normalize_laplacian(adj, {NormKind::rw, false}), IsolatedNodeError);
    CHECK_NOTHROW(normalize_laplacian(adj, {NormKind::rw, true}));
}

TEST_CASE("rw row sums stay within 1e-12 on random graphs") {
    Rng rng(17);
    for (int t = 0; t < 10; ++t) {
        const Index n = 10 + 3 * t;
        std::vector<Edge> edges;
        for (Index i = 0; i < n; ++i) {
            for (Index j = i + 1; j < n; ++j) {
                if (rng.bernoulli(0.25)) {
                    edges.push_back({i, j, 1.0});
                    edges.push_back({j, i, 1.0});
                }
            }
        }
        const SparseMatrix l =
            normalize_laplacian(build_csr(edges, n, n), {NormKind::rw, true});
        for (Index i = 0; i < n; ++i) {
            double s = 0.0;
            for (Index k = l.row_ptr[i]; k < l.row_ptr[i + 1]; ++k) s += l.values[k];
            CHECK(std::abs(s - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("spmm: identity") {
    const SparseMatrix eye = build_csr({{0, 0, 1}, {1, 1, 1}, {2, 2, 1}}, 3, 3);
    DenseMatrix h(3, 2);
    for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] = static_cast<double>(i);
    const DenseMatrix out = spmm(eye, h);
    CHECK(oracle::max_abs_diff(out, h) == 0.0);
}

TEST_CASE("spmm: rw triangle averages the other two rows") {
    const SparseMatrix l = normalize_laplacian(triangle_adj(), {NormKind::rw, false});
    DenseMatrix h(3, 3);
    h(0, 0) = h(1, 1) = h(2, 2) = 1.0;  // one-hot rows
    const DenseMatrix out = spmm(l, h);
    CHECK(out(0, 1) == doctest::Approx(0.5));
    CHECK(out(0, 2) == doctest::Approx(0.5));
    CHECK(out(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("spmm: matches dense oracle to 1e-12") {
    Rng rng(23);
    for (int t = 0; t < 8; ++t) {
        const Index n = 10 + 5 * t;
        const SparseMatrix l = random_sparse(n, 0.3, rng);
        DenseMatrix h(n, 7);
        for (auto& v : h.data) v = rng.normal();
        const DenseMatrix got = spmm(l, h);
        const DenseMatrix want = oracle::dense_matmul(l.to_dense(), h);
        CHECK(oracle::rel_frobenius_err(got, want) <= 1e-12);
    }
    DenseMatrix wrong(3, 3);
    CHECK_THROWS_AS(spmm(random_sparse(5, 0.5, rng), wrong), DimensionMismatchError);
}

TEST_CASE("restrict: identity restriction reproduces the matrix") {
    Rng rng(31);
    const SparseMatrix l = random_sparse(9, 0.3, rng);
    std::vector<Index> all(9);
    for (Index i = 0; i < 9; ++i) all[i] = i;
    const Restriction r = restrict_matrix(l, all, all);
    CHECK(r.matrix.row_ptr == l.row_ptr);
    CHECK(r.matrix.col_idx == l.col_idx);
    CHECK(r.matrix.values == l.values);
}

TEST_CASE("restrict: single row carries exactly its entries") {
    const SparseMatrix l = normalize_laplacian(triangle_adj(), {NormKind::rw, false});
    const Restriction r = restrict_matrix(l, {0}, {1, 2});
    CHECK(r.matrix.n_rows == 1);
    CHECK(r.matrix.nnz() == 2);
    CHECK(r.matrix.at(0, 0) == doctest::Approx(0.5));
    CHECK(r.matrix.at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("restrict: random restriction equals dense slice; maps recover ids") {
    Rng rng(37);
    for (int t = 0; t < 6; ++t) {
        const Index n = 12;
        const SparseMatrix l = random_sparse(n, 0.4, rng);
        const DenseMatrix dense = l.to_dense();
        auto rows = rng.sample_without_replacement(n, 5);
        auto cols = rng.sample_without_replacement(n, 7);
        const std::vector<Index> rids(rows.begin(), rows.end());
        const std::vector<Index> cids(cols.begin(), cols.end());
        const Restriction r = restrict_matrix(l, rids, cids);
        CHECK(r.row_ids == rids);
        CHECK(r.col_ids == cids);
        for (std::size_t a = 0; a < rids.size(); ++a) {
            for (std::size_t b = 0; b < cids.size(); ++b) {
                CHECK(r.matrix.at(static_cast<Index>(a), static_cast<Index>(b)) ==
                      dense(rids[a], cids[b]));
            }
        }
    }
    const SparseMatrix l = random_sparse(6, 0.4, rng);
    CHECK_THROWS_AS(restrict_matrix(l, {0, 0}, {1}), DuplicateIdError);
    CHECK_THROWS_AS(restrict_matrix(l, {0}, {99}), IndexOutOfRangeError);
}

TEST_CASE("restrict: per-entry scale applies") {
    const SparseMatrix l = normalize_laplacian(triangle_adj(), {NormKind::rw, false});
    const Restriction r =
        restrict_matrix(l, {0, 1, 2}, {0, 1, 2}, [](double v) { return 4.0 * v; });
    for (double v : r.matrix.values) CHECK(v == doctest::Approx(2.0));
}
