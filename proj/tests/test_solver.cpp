#include <algorithm>
#include <doctest.h>

#include "mvsgnn/errors.hpp"
#include "mvsgnn/rng.hpp"
#include "mvsgnn/solver.hpp"
#include "oracles.hpp"

using namespace mvsgnn;

namespace {

double objective(const std::vector<double>& g, const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double gi = std::max(g[i], 1e-12);
        s += gi * gi / p[i];
    }
    return s;
}

std::vector<double> random_gbar(Rng& rng, Index n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (auto& v : g) v = rng.exponential() * (rng.bernoulli(0.2) ? 10.0 : 1.0);
    if (rng.bernoulli(0.15)) g[0] = 0.0;  // exercise the zero floor
    return g;
}

} // namespace

TEST_CASE("optimal_probs: uniform norms give the uniform distribution") {
    const ProbabilityVector p = optimal_probs({1.0, 1.0, 1.0, 1.0}, 2);
    CHECK(p.kappa == 4);
    for (double v : p.probs) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
    double sum = 0.0;
    for (double v : p.probs) sum += v;
    CHECK(std::abs(sum - 2.0) <= 1e-9);
}

TEST_CASE("optimal_probs: one dominant norm clamps") {
    const ProbabilityVector p = optimal_probs({1.0, 1.0, 10.0}, 2);
    CHECK(p.kappa == 2);
    CHECK(p.mu == doctest::Approx(2.0));
    CHECK(p.probs[0] == doctest::Approx(0.5));
    CHECK(p.probs[1] == doctest::Approx(0.5));
    CHECK(p.probs[2] == doctest::Approx(1.0));
}

TEST_CASE("optimal_probs: clamp boundary sits at p = 1") {
    const ProbabilityVector p = optimal_probs({1.0, 1.0, 1.0, 3.0}, 2);
    CHECK(p.probs[0] == doctest::Approx(1.0 / 3.0));
    CHECK(p.probs[1] == doctest::Approx(1.0 / 3.0));
    CHECK(p.probs[2] == doctest::Approx(1.0 / 3.0));
    CHECK(p.probs[3] == doctest::Approx(1.0));
    CHECK(p.mu == doctest::Approx(3.0));
}

TEST_CASE("optimal_probs: p_i = min(1, g_i/mu) and feasibility, random sweep") {
    Rng rng(101);
    for (int t = 0; t < 2000; ++t) {
        const Index n = 1 + static_cast<Index>(rng.uniform_below(64));
        const Index b = 1 + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        auto g = random_gbar(rng, n);
        if (*std::max_element(g.begin(), g.end()) == 0.0) g[0] = 1.0;
        const ProbabilityVector p = optimal_probs(g, b);

        double sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(p.probs[i] > 0.0);
            CHECK(p.probs[i] <= 1.0 + 1e-15);
            const double direct = std::min(1.0, std::max(g[i], 1e-12) / p.mu);
            CHECK(p.probs[i] == doctest::Approx(direct).epsilon(1e-10));
            sum += p.probs[i];
        }
        CHECK(std::abs(sum - static_cast<double>(b)) <= 1e-9);
    }
}

TEST_CASE("optimal_probs matches the water-filling oracle and the grid search") {
    Rng rng(202);
    for (int t = 0; t < 2000; ++t) {
        const Index n = 2 + static_cast<Index>(rng.uniform_below(62));
        const Index b = 1 + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        auto g = random_gbar(rng, n);
        if (*std::max_element(g.begin(), g.end()) == 0.0) g[0] = 1.0;
        const ProbabilityVector fast = optimal_probs(g, b);
        const ProbabilityVector slow = oracle_probs(g, b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(std::abs(fast.probs[i] - slow.probs[i]) <= 1e-10);
        }
    }
    // Bisection on the feasibility equation as a second, sort-free route.
    for (int t = 0; t < 200; ++t) {
        const Index n = 2 + static_cast<Index>(rng.uniform_below(30));
        const Index b = 1 + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        auto g = random_gbar(rng, n);
        if (*std::max_element(g.begin(), g.end()) == 0.0) g[0] = 1.0;
        const ProbabilityVector fast = optimal_probs(g, b);
        const auto grid = oracle::grid_probs(g, b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(std::abs(fast.probs[i] - grid[i]) <= 1e-7);
        }
    }
}

TEST_CASE("optimal_probs: objective beats random feasible vectors and the oracle") {
    Rng rng(303);
    for (int t = 0; t < 200; ++t) {
        const Index n = 2 + static_cast<Index>(rng.uniform_below(11));
        const Index b = 1 + static_cast<Index>(rng.uniform_below(std::min<std::uint64_t>(6, n)));
        auto g = random_gbar(rng, n);
        if (*std::max_element(g.begin(), g.end()) == 0.0) g[0] = 1.0;
        const ProbabilityVector best = optimal_probs(g, b);
        const double best_obj = objective(g, best.probs);
        CHECK(best_obj <= objective(g, oracle_probs(g, b).probs) + 1e-9);
        for (int r = 0; r < 1000; ++r) {
            std::vector<double> p(static_cast<std::size_t>(n));
            double total = 0.0;
            for (auto& v : p) {
                v = rng.exponential();
                total += v;
            }
            for (auto& v : p) v = std::min(1.0, std::max(1e-12, v * b / total));
            CHECK(best_obj <= objective(g, p) + 1e-9);
        }
    }
}

TEST_CASE("optimal_probs: scale invariance and monotonicity") {
    Rng rng(404);
    for (int t = 0; t < 300; ++t) {
        const Index n = 2 + static_cast<Index>(rng.uniform_below(40));
        const Index b = 1 + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        auto g = random_gbar(rng, n);
        if (*std::max_element(g.begin(), g.end()) == 0.0) g[0] = 1.0;
        const ProbabilityVector base = optimal_probs(g, b);

        // Powers of two rescale exactly in floating point.
        auto scaled = g;
        for (auto& v : scaled) v *= 0.25;
        const ProbabilityVector quarter = optimal_probs(scaled, b);
        CHECK(quarter.probs == base.probs);

        for (auto& v : scaled) v *= 4.0 * 3.7;
        const ProbabilityVector odd = optimal_probs(scaled, b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(odd.probs[i] == doctest::Approx(base.probs[i]).epsilon(1e-12));
        }

        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j = 0; j < g.size(); ++j) {
                if (g[i] >= g[j]) CHECK(base.probs[i] >= base.probs[j] - 1e-12);
            }
        }
    }
}

TEST_CASE("optimal_probs: errors") {
    CHECK_THROWS_AS(optimal_probs({0.0, 0.0}, 1), AllZeroGradientsError);
    CHECK_THROWS_AS(optimal_probs({1.0, 2.0}, 3), BudgetExceedsNError);
    CHECK_THROWS_AS(optimal_probs({1.0, 2.0}, 0), BudgetExceedsNError);
}

TEST_CASE("quickselect_threshold: analytic cases") {
    CHECK(quickselect_threshold({3.0, 3.0, 3.0, 3.0}, 3) == doctest::Approx(4.0));  // cN/B
    CHECK(quickselect_threshold({5.0}, 1) == doctest::Approx(5.0));
}

TEST_CASE("quickselect_threshold: differential test against the closed form") {
    Rng rng(505);
    for (int t = 0; t < 5000; ++t) {
        const Index n = 1 + static_cast<Index>(rng.uniform_below(64));
        const Index b = 1 + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        auto g = random_gbar(rng, n);
        if (*std::max_element(g.begin(), g.end()) == 0.0) g[0] = 1.0;
        if (rng.bernoulli(0.3)) {
            // Duplicate-heavy inputs stress the pivot equality branches.
            for (auto& v : g) v = std::floor(v * 2.0) / 2.0 + 0.5;
        }
        const double mu_sorted = optimal_probs(g, b).mu;
        const double mu_quick = quickselect_threshold(g, b);
        CHECK(std::abs(mu_quick - mu_sorted) <= 1e-12 * std::max(1.0, std::abs(mu_sorted)));
    }
}

TEST_CASE("variance_stats: uniform norms have zero gap, exactly") {
    const std::vector<double> g(8, 1.0);
    const ProbabilityVector p = optimal_probs(g, 3);
    const VarianceStats s = variance_stats(g, p);
    CHECK(s.gap == 0.0);
    for (double v : p.probs) CHECK(v == 3.0 / 8.0);
}

TEST_CASE("variance_stats: interior solution satisfies the gap identity") {
    const std::vector<double> g{1.0, 1.0, 10.0};
    const ProbabilityVector p = optimal_probs(g, 1);
    CHECK(p.kappa == 3);
    CHECK(p.probs[0] == doctest::Approx(1.0 / 12.0));
    CHECK(p.probs[2] == doctest::Approx(10.0 / 12.0));
    const VarianceStats s = variance_stats(g, p);
    CHECK(s.kappa_full);
    CHECK(std::abs(s.gap - s.gap_closed_form) <= 1e-12 * std::max(1.0, s.gap));
    CHECK(s.gap > 0.0);
}

TEST_CASE("variance_stats: positive gap iff non-uniform") {
    Rng rng(606);
    for (int t = 0; t < 100; ++t) {
        const Index n = 3 + static_cast<Index>(rng.uniform_below(20));
        std::vector<double> g(static_cast<std::size_t>(n));
        for (auto& v : g) v = 0.5 + rng.uniform01();
        const ProbabilityVector p = optimal_probs(g, 2);
        const VarianceStats s = variance_stats(g, p);
        bool uniform = true;
        for (double v : g) uniform = uniform && v == g[0];
        if (!uniform) CHECK(s.gap > 0.0);
    }
}

TEST_CASE("uplift_smallest: forces the kappa = N regime") {
    Rng rng(707);
    for (int t = 0; t < 500; ++t) {
        const Index n = 2 + static_cast<Index>(rng.uniform_below(40));
        const Index b = 1 + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        auto g = random_gbar(rng, n);
        if (*std::max_element(g.begin(), g.end()) == 0.0) g[0] = 1.0;
        const auto lifted = uplift_smallest(g, b);
        const ProbabilityVector p = optimal_probs(lifted, b);
        CHECK(p.kappa == n);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(lifted[i] >= std::max(g[i], 1e-12));
    }
}
