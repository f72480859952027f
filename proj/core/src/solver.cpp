#include "mvsgnn/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvsgnn/errors.hpp"

namespace mvsgnn {

namespace {

constexpr double kZeroFloor = 1e-12;

// Zero (and denormal-tiny) entries are floored to 1e-12 relative to the
// largest entry so every probability stays positive. A relative floor keeps
// the solution exactly invariant under rescaling of the input.
std::vector<double> floored(const std::vector<double>& g_bar) {
    std::vector<double> g = g_bar;
    double top = 0.0;
    for (double v : g) {
        if (v < 0.0) throw AllZeroGradientsError("gradient norms must be nonnegative");
        top = std::max(top, v);
    }
    const double floor = kZeroFloor * top;
    for (double& v : g) {
        if (v < floor) v = floor;
    }
    return g;
}

void check_inputs(const std::vector<double>& g_bar, Index budget) {
    const Index n = static_cast<Index>(g_bar.size());
    if (budget < 1 || budget > n) {
        throw BudgetExceedsNError("budget must lie in [1, N]");
    }
    bool any_positive = false;
    for (double v : g_bar) any_positive = any_positive || v > 0.0;
    if (!any_positive) throw AllZeroGradientsError("all gradient norms are zero");
}

} // namespace

ProbabilityVector optimal_probs(const std::vector<double>& g_bar, Index budget) {
    check_inputs(g_bar, budget);
    const std::vector<double> g = floored(g_bar);
    const Index n = static_cast<Index>(g.size());

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return g[static_cast<std::size_t>(a)] < g[static_cast<std::size_t>(b)];
    });

    std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
    for (Index i = 0; i < n; ++i) {
        prefix[static_cast<std::size_t>(i) + 1] =
            prefix[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    }

    // Largest kappa with (B + kappa - N) g_(kappa) <= sum_{j<=kappa} g_(j).
    // kappa = N - B + 1 always qualifies, so the scan terminates.
    Index kappa = 0;
    for (Index k = n; k >= std::max<Index>(1, n - budget + 1); --k) {
        const double coeff = static_cast<double>(budget + k - n);
        if (coeff < 1.0) break;
        if (coeff * g[static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)])] <=
            prefix[static_cast<std::size_t>(k)]) {
            kappa = k;
            break;
        }
    }
    if (kappa == 0) throw AllZeroGradientsError("no admissible threshold");

    ProbabilityVector pv;
    pv.budget = budget;
    pv.kappa = kappa;
    const double coeff = static_cast<double>(budget + kappa - n);
    pv.mu = prefix[static_cast<std::size_t>(kappa)] / coeff;
    pv.probs.assign(static_cast<std::size_t>(n), 1.0);
    for (Index i = 0; i < kappa; ++i) {
        const Index idx = order[static_cast<std::size_t>(i)];
        pv.probs[static_cast<std::size_t>(idx)] =
            coeff * g[static_cast<std::size_t>(idx)] / prefix[static_cast<std::size_t>(kappa)];
    }
    return pv;
}

namespace {

// Partition-based threshold search. `sum_small` accumulates mass known to be
// below the threshold, `n_large` counts entries known to be clamped at 1.
double calculate_threshold(std::vector<double>& cand, double budget, double sum_small,
                           double n_large) {
    for (;;) {
        const double pivot = cand.front();
        std::vector<double> less, greater;
        double sum_less = 0.0, sum_equal = 0.0;
        Index n_equal = 0, n_greater = 0;
        for (double v : cand) {
            if (v < pivot) {
                less.push_back(v);
                sum_less += v;
            } else if (v > pivot) {
                greater.push_back(v);
                ++n_greater;
            } else {
                sum_equal += v;
                ++n_equal;
            }
        }

        // Sample size implied by mu = pivot over the full input.
        const double implied = (sum_small + sum_less) / pivot +
                               static_cast<double>(n_equal + n_greater) + n_large;
        if (implied == budget) return pivot;
        if (implied > budget) {
            // mu lies above the pivot: everything <= pivot stays unclamped.
            sum_small += sum_less + sum_equal;
            if (greater.empty()) return sum_small / (budget - n_large);
            cand = std::move(greater);
        } else {
            // mu lies below the pivot: everything >= pivot is clamped.
            n_large += static_cast<double>(n_equal + n_greater);
            if (less.empty()) {
                if (budget - n_large <= 0.0) return pivot;
                return sum_small / (budget - n_large);
            }
            cand = std::move(less);
        }
    }
}

} // namespace

double quickselect_threshold(const std::vector<double>& g_bar, Index budget) {
    check_inputs(g_bar, budget);
    std::vector<double> g = floored(g_bar);
    return calculate_threshold(g, static_cast<double>(budget), 0.0, 0.0);
}

ProbabilityVector oracle_probs(const std::vector<double>& g_bar, Index budget) {
    check_inputs(g_bar, budget);
    const std::vector<double> g = floored(g_bar);
    const Index n = static_cast<Index>(g.size());

    std::vector<bool> clamped(static_cast<std::size_t>(n), false);
    Index n_clamped = 0;
    double mu = 0.0;
    for (;;) {
        if (budget - n_clamped == 0) {
            mu = *std::min_element(g.begin(), g.end());
            break;
        }
        double free_sum = 0.0;
        for (Index i = 0; i < n; ++i) {
            if (!clamped[static_cast<std::size_t>(i)]) free_sum += g[static_cast<std::size_t>(i)];
        }
        mu = free_sum / static_cast<double>(budget - n_clamped);
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            if (!clamped[static_cast<std::size_t>(i)] && g[static_cast<std::size_t>(i)] >= mu) {
                clamped[static_cast<std::size_t>(i)] = true;
                ++n_clamped;
                changed = true;
            }
        }
        if (!changed) break;
    }

    ProbabilityVector pv;
    pv.budget = budget;
    pv.mu = mu;
    pv.kappa = n - n_clamped;
    pv.probs.assign(static_cast<std::size_t>(n), 1.0);
    for (Index i = 0; i < n; ++i) {
        if (!clamped[static_cast<std::size_t>(i)]) {
            pv.probs[static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(i)] / mu;
        }
    }
    return pv;
}

VarianceStats variance_stats(const std::vector<double>& g_bar, const ProbabilityVector& p) {
    const Index n = static_cast<Index>(g_bar.size());
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    const double b = static_cast<double>(p.budget);
    const double p_uniform = b / static_cast<double>(n);

    VarianceStats s;
    double sum_g = 0.0, dist_sq = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double g = g_bar[static_cast<std::size_t>(i)];
        const double pi = p.probs[static_cast<std::size_t>(i)];
        s.g_value += g * g / pi;
        s.g_uniform += g * g / p_uniform;
        sum_g += g;
        const double d = pi - p_uniform;
        dist_sq += d * d;
    }
    s.g_value /= n2;
    s.g_uniform /= n2;
    s.gap = s.g_uniform - s.g_value;
    s.kappa_full = p.kappa == n;
    s.gap_closed_form = sum_g * sum_g / (b * b * b * static_cast<double>(n)) * dist_sq;
    return s;
}

namespace {

// With the k smallest entries raised to tau: sum = k tau + suffix_k. Finds
// the segment where tau lands; g_max caps tau (everything equal).
double solve_uplift_tau(const std::vector<double>& sorted, const std::vector<double>& suffix,
                        double target, double g_max) {
    const Index n = static_cast<Index>(sorted.size());
    for (Index k = 1; k <= n; ++k) {
        const double cand = (target - suffix[static_cast<std::size_t>(k)]) / static_cast<double>(k);
        const double seg_hi = k < n ? sorted[static_cast<std::size_t>(k)] : g_max;
        if (cand >= sorted[static_cast<std::size_t>(k - 1)] && cand <= seg_hi) return cand;
    }
    return g_max;
}

} // namespace

std::vector<double> uplift_smallest(const std::vector<double>& g_bar, Index budget) {
    check_inputs(g_bar, budget);
    std::vector<double> g = floored(g_bar);
    const Index n = static_cast<Index>(g.size());
    const double g_max = *std::max_element(g.begin(), g.end());
    const double total = std::accumulate(g.begin(), g.end(), 0.0);
    const double target = static_cast<double>(budget) * g_max;
    if (target <= total && optimal_probs(g, budget).kappa == n) return g;

    std::vector<double> sorted = g;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> suffix(static_cast<std::size_t>(n) + 1, 0.0);
    for (Index i = n - 1; i >= 0; --i) {
        suffix[static_cast<std::size_t>(i)] =
            suffix[static_cast<std::size_t>(i) + 1] + sorted[static_cast<std::size_t>(i)];
    }

    // The boundary solution has B g_max = sum exactly; rounding can push the
    // comparison either way, so inflate the target a little and verify. A
    // budget of N clamps everything no matter what; all-ones is kappa = N in
    // spirit and reported as such by the caller.
    for (const double inflate : {1.0 + 1e-9, 1.0 + 1e-6, 1.0 + 1e-3}) {
        const double tau = solve_uplift_tau(sorted, suffix, target * inflate, g_max);
        std::vector<double> lifted = g;
        for (double& v : lifted) v = std::max(v, tau);
        const ProbabilityVector p = optimal_probs(lifted, budget);
        bool all_ones = true;
        for (double v : p.probs) all_ones = all_ones && v == 1.0;
        if (p.kappa == n || all_ones) return lifted;
    }
    throw RegimeViolationError("could not uplift into the kappa = N regime");
}

} // namespace mvsgnn
