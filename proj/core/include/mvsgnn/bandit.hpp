#pragma once

#include <cstdint>
#include <vector>

#include "mvsgnn/dense.hpp"
#include "mvsgnn/rng.hpp"

namespace mvsgnn {

// Multiplicative-weights alternative to checkpoint sweeps: every node keeps
// a positive weight, rewarded by importance-weighted squared gradient norms,
// and the sampling distribution mixes the normalized weights with uniform.
struct BanditState {
    std::vector<double> weights;  // w_i > 0 over all n candidates
    double eta = 0.4;             // uniform mixing, in (0, 0.5)
    double delta = 1e-3;          // reward step size
    Index budget = 1;             // b, expected batch size
    long step = 0;

    Index size() const { return static_cast<Index>(weights.size()); }
};

BanditState make_bandit(Index n, Index budget, double eta, double delta);

// p_i = (1 - eta) b w_i / sum(w) + b eta / n, then entries above 1 are
// clipped with the excess redistributed proportionally over the unclipped
// ones, preserving sum(p) = b.
std::vector<double> current_probs(const BanditState& state);

// w_i <- w_i exp(delta g2_i / (n^2 p_i^3)) for the sampled nodes only.
// Exponents clamp at 30; weights renormalize to mean 1 when their spread
// passes 1e12. Both guards are inactive in ordinary regimes.
void bandit_update(BanditState& state, const std::vector<Index>& sampled,
                   const std::vector<double>& grad_sq, const std::vector<double>& probs_used);

struct RegretTrace {
    std::vector<double> g_bandit;   // G_t(p_t)
    std::vector<double> g_optimal;  // G_t(p*_t)
    double ratio = 0.0;             // sum G_t(p_t) / sum G_t(p*_t)
    std::vector<double> final_probs;
};

// Replays the weight dynamics against a known per-step g-bar schedule and
// compares each step's variance objective against the per-step optimum from
// the closed-form solver.
//
// The default (pathwise = false) applies the expected log-weight drift
// delta g2 / (n^2 p^2) to every node each step, which keeps a uniform
// schedule an exact fixed point and makes the trace deterministic.
// pathwise = true runs the sampled update through bandit_update instead.
// delta <= 0 selects delta = sqrt(eta^4 ln n / (T sum_i g_i^2)).
RegretTrace simulate_regret(const std::vector<std::vector<double>>& g_schedule, Index budget,
                            double eta, double delta, Index horizon, std::uint64_t seed,
                            bool pathwise = false);

} // namespace mvsgnn
