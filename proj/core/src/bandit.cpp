#include "mvsgnn/bandit.hpp"

#include <algorithm>
#include <cmath>

#include "mvsgnn/errors.hpp"
#include "mvsgnn/solver.hpp"

namespace mvsgnn {

BanditState make_bandit(Index n, Index budget, double eta, double delta) {
    if (n < 1 || budget < 1 || budget > n) throw ConfigError("bandit: budget must lie in [1, n]");
    if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("bandit: eta must lie in (0, 0.5)");
    if (!(delta > 0.0)) throw ConfigError("bandit: delta must be positive");
    BanditState s;
    s.weights.assign(static_cast<std::size_t>(n), 1.0);
    s.eta = eta;
    s.delta = delta;
    s.budget = budget;
    return s;
}

std::vector<double> current_probs(const BanditState& state) {
    const Index n = state.size();
    const double b = static_cast<double>(state.budget);
    double total = 0.0;
    for (double w : state.weights) total += w;

    // p_i = b ((1-eta) w_i + eta total/n) / total. Written this way the
    // all-equal-weights case lands on exactly b/n: (1-eta) + eta cancels to
    // 1 in floating point because 1-eta is computed exactly.
    std::vector<double> p(static_cast<std::size_t>(n));
    const double mix = state.eta * (total / static_cast<double>(n));
    for (Index i = 0; i < n; ++i) {
        p[static_cast<std::size_t>(i)] =
            b * ((1.0 - state.eta) * state.weights[static_cast<std::size_t>(i)] + mix) / total;
    }

    // Clip to 1 and push the excess onto the unclipped entries, scaling them
    // by a common factor so sum(p) = b survives. At most n rounds.
    for (;;) {
        double clipped_count = 0.0;
        double open_mass = 0.0;
        bool any_over = false;
        for (double v : p) {
            if (v >= 1.0) {
                clipped_count += 1.0;
                any_over = any_over || v > 1.0;
            } else {
                open_mass += v;
            }
        }
        if (!any_over) break;
        const double scale = (b - clipped_count) / open_mass;
        for (double& v : p) {
            if (v >= 1.0) {
                v = 1.0;
            } else {
                v *= scale;
            }
        }
    }
    return p;
}

void bandit_update(BanditState& state, const std::vector<Index>& sampled,
                   const std::vector<double>& grad_sq, const std::vector<double>& probs_used) {
    if (sampled.size() != grad_sq.size() || sampled.size() != probs_used.size()) {
        throw ShapeMismatchError("bandit_update: size mismatch");
    }
    const double n = static_cast<double>(state.size());
    for (std::size_t k = 0; k < sampled.size(); ++k) {
        const Index i = sampled[k];
        if (i < 0 || i >= state.size()) throw IndexOutOfRangeError("bandit_update: bad node id");
        const double p = probs_used[k];
        if (!(p > 0.0 && p <= 1.0)) throw NonPositiveProbError("bandit_update: p outside (0,1]");
        const double exponent =
            std::min(30.0, state.delta * grad_sq[k] / (n * n * p * p * p));
        state.weights[static_cast<std::size_t>(i)] *= std::exp(exponent);
    }
    state.step += 1;

    const auto [mn, mx] = std::minmax_element(state.weights.begin(), state.weights.end());
    if (*mx / *mn > 1e12) {
        double mean = 0.0;
        for (double w : state.weights) mean += w;
        mean /= n;
        for (double& w : state.weights) w /= mean;
    }
}

namespace {

double variance_objective(const std::vector<double>& g, const std::vector<double>& p) {
    const double n = static_cast<double>(g.size());
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * g[i] / p[i];
    return s / (n * n);
}

} // namespace

RegretTrace simulate_regret(const std::vector<std::vector<double>>& g_schedule, Index budget,
                            double eta, double delta, Index horizon, std::uint64_t seed,
                            bool pathwise) {
    if (horizon < 1) throw ConfigError("simulate_regret: horizon must be >= 1");
    if (g_schedule.empty()) throw ConfigError("simulate_regret: empty schedule");
    const Index n = static_cast<Index>(g_schedule.front().size());

    if (delta <= 0.0) {
        double sum_g2 = 0.0;
        for (const auto& g : g_schedule) {
            for (double v : g) sum_g2 += v * v;
        }
        sum_g2 /= static_cast<double>(g_schedule.size());
        delta = std::sqrt(std::pow(eta, 4) * std::log(static_cast<double>(n)) /
                          (static_cast<double>(horizon) * sum_g2));
    }

    BanditState state = make_bandit(n, budget, eta, delta);
    Rng rng(seed);
    RegretTrace trace;
    double sum_bandit = 0.0, sum_opt = 0.0;

    for (Index t = 0; t < horizon; ++t) {
        const auto& g = g_schedule[static_cast<std::size_t>(t) % g_schedule.size()];
        const std::vector<double> p = current_probs(state);
        const ProbabilityVector star = optimal_probs(g, budget);

        trace.g_bandit.push_back(variance_objective(g, p));
        trace.g_optimal.push_back(variance_objective(g, star.probs));
        sum_bandit += trace.g_bandit.back();
        sum_opt += trace.g_optimal.back();

        if (pathwise) {
            std::vector<Index> sampled;
            std::vector<double> g2, used;
            for (Index i = 0; i < n; ++i) {
                if (rng.bernoulli(p[static_cast<std::size_t>(i)])) {
                    sampled.push_back(i);
                    g2.push_back(g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)]);
                    used.push_back(p[static_cast<std::size_t>(i)]);
                }
            }
            if (!sampled.empty()) bandit_update(state, sampled, g2, used);
        } else {
            // Expected drift of the sampled rule: the Bernoulli inclusion
            // cancels one factor of p from the exponent. The common minimum
            // is subtracted before exponentiation; p depends on weights only
            // through their ratios, and this keeps an all-equal reward an
            // exact no-op (and bounds weight growth).
            const double nn = static_cast<double>(n);
            std::vector<double> exponents(static_cast<std::size_t>(n));
            double lo = 1e300;
            for (Index i = 0; i < n; ++i) {
                const double pi = p[static_cast<std::size_t>(i)];
                const double gi = g[static_cast<std::size_t>(i)];
                exponents[static_cast<std::size_t>(i)] =
                    std::min(30.0, state.delta * gi * gi / (nn * nn * pi * pi));
                lo = std::min(lo, exponents[static_cast<std::size_t>(i)]);
            }
            for (Index i = 0; i < n; ++i) {
                state.weights[static_cast<std::size_t>(i)] *=
                    std::exp(exponents[static_cast<std::size_t>(i)] - lo);
            }
            state.step += 1;
            const auto [mn, mx] = std::minmax_element(state.weights.begin(), state.weights.end());
            if (*mx / *mn > 1e12) {
                double mean = 0.0;
                for (double w : state.weights) mean += w;
                mean /= nn;
                for (double& w : state.weights) w /= mean;
            }
        }
    }
    trace.ratio = sum_bandit / sum_opt;
    trace.final_probs = current_probs(state);
    return trace;
}

} // namespace mvsgnn
