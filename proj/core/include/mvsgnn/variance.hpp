#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvsgnn/dataset.hpp"
#include "mvsgnn/gcn.hpp"
#include "mvsgnn/history.hpp"
#include "mvsgnn/model.hpp"
#include "mvsgnn/plan.hpp"
#include "mvsgnn/samplers.hpp"
#include "mvsgnn/solver.hpp"

namespace mvsgnn {

// How a Monte-Carlo arm draws its per-trial randomness.
//
// Batch draws: the uniform arm uses i.i.d. Bernoulli(B/n) inclusions so its
// variance is directly comparable with the importance-sampled arm at equal
// expected batch size; node_wise / layer_wise / subgraph draw B distinct
// nodes; mvs draws Bernoulli(p_i) with p from optimal_probs over the true
// per-sample norms (gamma = 1).
// Which per-sample norms feed the importance distribution: the exact norm of
// each sample's full gradient (one backward per node, affordable here), or
// one of the shared-backward proxies used during training.
enum class NormSource { true_full, proxy_last_preactivation, proxy_last_layer_weight };

struct SamplerSpec {
    Strategy strategy = Strategy::uniform;
    Index batch_size = 16;
    Index neighbor_s = 5;                  // node_wise fan-in
    std::vector<Index> layer_sizes;        // layer_wise draw counts
    LayerDist layer_dist = LayerDist::uniform;
    bool exact_inference = true;
    NormSource norm_source = NormSource::true_full;
};

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
    Index trials = 0;
};

// One-layer perturbation of the per-layer embedding approximation variance:
// each trial rebuilds layer `layer`'s sampled aggregate from exact inputs at
// layer-1 and measures the squared Frobenius distance to the exact layer
// output, divided by the row count. Strategies with stale parts read
// `history`.
McEstimate mc_embedding_variance(const SamplerSpec& spec, const ModelParams& params,
                                 const GraphDataset& ds, const SparseMatrix& l, Index layer,
                                 Index trials, std::uint64_t seed,
                                 const HistoryStore* history = nullptr);

struct GradientMseReport {
    Index trials = 0;
    double bias_hat = 0.0;      // E ||g_tilde - g||^2
    double bias_se = 0.0;
    double grad_var_hat = 0.0;  // E ||g - grad f||^2
    double grad_var_se = 0.0;
    double total_mse_hat = 0.0; // E ||g_tilde - grad f||^2
    double total_se = 0.0;
    double decomposition_residual = 0.0;  // |total - bias - var|
};

// Pairs g_tilde (sampled embeddings) with g (same batch and weights, exact
// embeddings) per trial and reports all three mean-square errors against the
// exact training gradient.
GradientMseReport mc_gradient_mse(const SamplerSpec& spec, const ModelParams& params,
                                  const GraphDataset& ds, const SparseMatrix& l, LossMode loss,
                                  Index trials, std::uint64_t seed,
                                  const HistoryStore* history = nullptr);

struct IdentityCheck {
    double lhs = 0.0;      // G(p_us) - G(p_is), direct evaluation
    double rhs = 0.0;      // (sum g)^2 / (B^3 N) ||p_is - p_us||^2
    double abs_err = 0.0;
};

// Variance-gap identity in the kappa = N regime; inputs outside the regime
// are uplifted first and rejected if the uplift fails to land kappa = N.
IdentityCheck us_is_identity_check(const std::vector<double>& g_bar, Index budget);

struct BoundIngredients {
    double avg_degree = 0.0;           // D: mean support size of L
    std::vector<double> beta;          // beta[l-1]: max row 2-norm of L (layer l)
    std::vector<double> delta_gamma;   // delta_gamma[l-1] for layer l; layer 1 is 0
    std::vector<double> bound;         // bound[l-1] = D beta^2 dgamma^2
};

// Measured ingredients of the history-variance bound at the current
// parameters and history contents.
BoundIngredients bound_ingredients(const GraphDataset& ds, const ModelParams& params,
                                   const SparseMatrix& l, const HistoryStore& store);

// One emitted row set of the variance experiment (see the harness CSV).
struct VarianceReport {
    std::string strategy;
    Index trials = 0;
    std::uint64_t seed = 0;
    std::vector<McEstimate> v_per_layer;  // index l-1
    GradientMseReport grad;
    BoundIngredients ingredients;
};

} // namespace mvsgnn
