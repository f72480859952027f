#pragma once

#include <vector>

#include "mvsgnn/dense.hpp"

namespace mvsgnn {

// Solution of   min sum_i g_i^2 / p_i   s.t.  sum_i p_i = B,  p_i in (0,1].
// The optimum has the water-filling form p_i = min(1, g_i / mu): with the
// g sorted ascending, the first kappa entries sit strictly below the cap and
// the remaining N - kappa are clamped at 1.
struct ProbabilityVector {
    std::vector<double> probs;  // original index order
    Index budget = 0;
    Index kappa = 0;            // boundary index after ascending sort
    double mu = 0.0;            // threshold; p_i = min(1, g_i / mu)
};

// Closed-form solve: stable ascending sort (ties break by original index),
// then the largest kappa with (B + kappa - N) * g_(kappa) <= sum_{j<=kappa}
// g_(j). Zero entries are floored to 1e-12 first so every p stays positive.
ProbabilityVector optimal_probs(const std::vector<double>& g_bar, Index budget);

// Same threshold via recursive first-element-pivot partitioning with
// sumSmall / nLarge accumulators; expected O(N). Agrees with optimal_probs'
// mu to within rounding.
double quickselect_threshold(const std::vector<double>& g_bar, Index budget);

// Independent KKT solve by iterated clamping: set mu to the unclamped mass
// over the remaining budget, clamp everything at or above mu, repeat until
// stable. Exists as a cross-check; not used on any hot path.
ProbabilityVector oracle_probs(const std::vector<double>& g_bar, Index budget);

struct VarianceStats {
    double g_value = 0.0;          // (1/N^2) sum g_i^2 / p_i
    double g_uniform = 0.0;        // same at p = B/N
    double gap = 0.0;              // g_uniform - g_value
    double gap_closed_form = 0.0;  // (sum g)^2 / (B^3 N) * ||p - p_unif||^2, kappa = N only
    bool kappa_full = false;
};

// Effective stochastic-gradient variance of a sampling distribution and its
// gap to uniform. The closed form applies only in the kappa = N regime
// (B * max g <= sum g); outside it gap_closed_form is reported but holds no
// identity.
VarianceStats variance_stats(const std::vector<double>& g_bar, const ProbabilityVector& p);

// Raises the smallest entries to the least value tau making
// B * max(g) <= sum_i max(g_i, tau), which forces kappa = N. Already
// conforming inputs come back unchanged.
std::vector<double> uplift_smallest(const std::vector<double>& g_bar, Index budget);

} // namespace mvsgnn
