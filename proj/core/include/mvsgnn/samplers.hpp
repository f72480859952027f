#pragma once

#include <unordered_map>
#include <vector>

#include "mvsgnn/plan.hpp"
#include "mvsgnn/rng.hpp"
#include "mvsgnn/sparse.hpp"

namespace mvsgnn {

// B distinct candidates uniformly without replacement, wrapped in an
// all-neighbor (exact inference) plan with p = B / |candidates|.
MiniBatchPlan uniform_batch(const SparseMatrix& l, const std::vector<Index>& candidates,
                            Index batch_size, Index depth, Rng& rng);

// Neighbor sampling: per retained row, keep s entries of its L support,
// scaled by |N(i)| / s (all entries unscaled when the support fits). Rows
// are re-sampled independently at every layer. inclusion_probs defaults to 1
// when omitted.
MiniBatchPlan node_wise_plan(const SparseMatrix& l, const std::vector<Index>& batch, Index s,
                             Index depth, Rng& rng,
                             const std::vector<double>& inclusion_probs = {});

enum class LayerDist { uniform, degree };

// Layer-wise sampling restricted to the union of the upper layer's
// neighborhoods. s i.i.d. draws from `dist` over that union; a column drawn
// m times carries m * L_ij / (s p_j). layer_sizes[k] is the draw count for
// the k-th level below the batch.
MiniBatchPlan layer_wise_plan(const SparseMatrix& l, const std::vector<Index>& batch,
                              const std::vector<Index>& layer_sizes, LayerDist dist, Index depth,
                              Rng& rng, const std::vector<double>& inclusion_probs = {});

// One induced batch x batch restriction of L, reused at every layer, raw
// entries. The estimator's only randomness is the batch itself.
MiniBatchPlan subgraph_plan(const SparseMatrix& l, const std::vector<Index>& batch, Index depth,
                            const std::vector<double>& inclusion_probs = {});

// Outer/inner loop bookkeeping for checkpoint-based importance sampling:
// the checkpoint set, its cached per-sample gradient-norm bounds, and the
// inner-loop position.
struct CheckpointState {
    std::vector<Index> nodes;        // V_S, sorted global ids
    std::vector<double> grad_norms;  // cached g-bar over V_S
    std::vector<long> freshness;     // step at which each cache entry was written
    double gamma = 1.0;
    Index inner_len = 20;            // K
    Index inner_step = 0;            // k within the current outer iteration
    bool cache_ready = false;

    std::unordered_map<Index, Index> position;  // global id -> index in nodes

    void rebuild_position();
};

// Draws V_S of size round(|candidates| * gamma), clipped to [1, N], and
// returns the exact-inference plan over it with p = gamma. The caller runs
// the forward pass, refreshes history, and fills the gradient cache.
std::pair<MiniBatchPlan, CheckpointState> mvs_checkpoint(const SparseMatrix& l,
                                                         const std::vector<Index>& candidates,
                                                         double gamma, Index inner_len,
                                                         Index depth, Rng& rng);

// Overwrites cached norms for the given nodes (which must lie in V_S).
void update_grad_cache(CheckpointState& state, const std::vector<Index>& nodes,
                       const std::vector<double>& norms, long step);

// Inner-loop batch: minimal-variance Bernoulli draw over V_S with budget B.
// exact_inference=true builds the all-neighbor plan; otherwise each layer
// pairs the batch x batch restriction with a stale complement covering the
// remaining neighbors. Empty draws are retried (16 attempts), then rejected.
MiniBatchPlan mvs_minibatch(const CheckpointState& state, const SparseMatrix& l, Index batch_size,
                            bool exact_inference, Index depth, Rng& rng);

// Shared plan shape for probability-driven batches (used by the inner loop
// and by the bandit strategy).
MiniBatchPlan importance_plan(const SparseMatrix& l, const std::vector<Index>& batch,
                              const std::vector<double>& probs_of_batch, bool exact_inference,
                              Index depth, Strategy tag);

} // namespace mvsgnn
