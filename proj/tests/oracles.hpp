#pragma once

// Independent reference implementations used to pin expected values. These
// deliberately avoid the library's sparse/backward code paths: everything is
// dense, brute force, or finite differences.

#include <cmath>
#include <functional>
#include <vector>

#include "mvsgnn/dataset.hpp"
#include "mvsgnn/dense.hpp"
#include "mvsgnn/gcn.hpp"
#include "mvsgnn/rng.hpp"
#include "mvsgnn/sparse.hpp"

namespace oracle {

using mvsgnn::DenseMatrix;
using mvsgnn::Index;

// Plain triple-loop product of dense matrices.
inline DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out(a.rows, b.cols);
    for (Index i = 0; i < a.rows; ++i) {
        for (Index j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (Index k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    }
    return out;
}

inline DenseMatrix dense_from_edges(const std::vector<mvsgnn::Edge>& edges, Index r, Index c) {
    DenseMatrix out(r, c);
    for (const auto& e : edges) out(e.row, e.col) += e.value;
    return out;
}

// Dense normalized Laplacian straight from the definition.
inline DenseMatrix dense_laplacian(const DenseMatrix& adj, bool rw, bool self_loops) {
    const Index n = adj.rows;
    DenseMatrix a = adj;
    if (self_loops) {
        for (Index i = 0; i < n; ++i) a(i, i) += 1.0;
    }
    std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) deg[static_cast<std::size_t>(i)] += a(i, j);
    }
    DenseMatrix out(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (a(i, j) == 0.0) continue;
            out(i, j) = rw ? a(i, j) / deg[static_cast<std::size_t>(i)]
                           : a(i, j) / std::sqrt(deg[static_cast<std::size_t>(i)] *
                                                 deg[static_cast<std::size_t>(j)]);
        }
    }
    return out;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

inline double rel_frobenius_err(const DenseMatrix& a, const DenseMatrix& b) {
    return std::sqrt(mvsgnn::frobenius_sq_diff(a, b)) /
           std::max(1e-300, std::sqrt(mvsgnn::frobenius_sq(b)));
}

// Straight-line dense recomputation of a GCN forward pass (plain or concat),
// no sparse code involved.
struct DenseForward {
    std::vector<DenseMatrix> h;  // h[0] = x, h[l] = relu(z[l-1])
    std::vector<DenseMatrix> z;
};

inline DenseForward dense_forward(const mvsgnn::ModelParams& params,
                                  const DenseMatrix& laplacian_dense, const DenseMatrix& x) {
    DenseForward out;
    out.h.push_back(x);
    for (Index l = 1; l <= params.num_layers(); ++l) {
        DenseMatrix agg = dense_matmul(laplacian_dense, out.h.back());
        DenseMatrix w_in = params.aggregation == mvsgnn::Aggregation::concat
                               ? mvsgnn::hconcat(out.h.back(), agg)
                               : agg;
        DenseMatrix zz = dense_matmul(w_in, params.weights[static_cast<std::size_t>(l - 1)]);
        out.z.push_back(zz);
        for (auto& v : zz.data) v = v > 0.0 ? v : 0.0;
        out.h.push_back(std::move(zz));
    }
    return out;
}

// Central finite differences of a scalar function of the model weights.
inline double finite_difference(const std::function<double()>& eval, double* coord, double h) {
    const double saved = *coord;
    *coord = saved + h;
    const double up = eval();
    *coord = saved - h;
    const double down = eval();
    *coord = saved;
    return (up - down) / (2.0 * h);
}

// Exhaustive 1-D threshold search for the capped water-filling problem:
// minimizes sum g_i^2 / min(1, g_i/mu) subject to sum min(1, g_i/mu) = B by
// solving for mu on a fine bisection of the feasibility equation.
inline std::vector<double> grid_probs(const std::vector<double>& g, Index budget) {
    auto total_prob = [&](double mu) {
        double s = 0.0;
        for (double v : g) s += std::min(1.0, v / mu);
        return s;
    };
    double lo = 1e-14, hi = 0.0;
    for (double v : g) hi += v;
    hi = std::max(hi, 1e-12) / static_cast<double>(budget) * 2.0 + 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (total_prob(mid) > static_cast<double>(budget)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double mu = 0.5 * (lo + hi);
    std::vector<double> p;
    p.reserve(g.size());
    for (double v : g) p.push_back(std::min(1.0, std::max(v, 1e-12) / mu));
    return p;
}

// Random connected-ish test graph: an SBM draw with guaranteed fallback edges
// so no node is isolated.
inline mvsgnn::GraphDataset small_graph(Index n, double p_edge, Index feature_dim,
                                        Index classes, mvsgnn::LabelMode mode,
                                        std::uint64_t seed) {
    mvsgnn::Rng rng(seed);
    std::vector<mvsgnn::Edge> edges;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            if (rng.bernoulli(p_edge) || j == i + 1) {
                edges.push_back({i, j, 1.0});
                edges.push_back({j, i, 1.0});
            }
        }
    }
    mvsgnn::GraphDataset ds;
    ds.adjacency = mvsgnn::build_csr(edges, n, n);
    ds.features = DenseMatrix(n, feature_dim);
    for (auto& v : ds.features.data) v = rng.normal();
    ds.label_mode = mode;
    if (mode == mvsgnn::LabelMode::single) {
        ds.labels_single.resize(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            ds.labels_single[static_cast<std::size_t>(i)] =
                static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(classes)));
        }
    } else {
        ds.labels_multi = DenseMatrix(n, classes);
        for (Index i = 0; i < n; ++i) {
            for (Index c = 0; c < classes; ++c) {
                ds.labels_multi(i, c) = rng.bernoulli(0.4) ? 1.0 : 0.0;
            }
            ds.labels_multi(i, static_cast<Index>(rng.uniform_below(
                                   static_cast<std::uint64_t>(classes)))) = 1.0;
        }
    }
    ds.splits.assign(static_cast<std::size_t>(n), mvsgnn::Split::train);
    return ds;
}

} // namespace oracle
