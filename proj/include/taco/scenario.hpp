#pragma once

#include "taco/problem.hpp"
#include "taco/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace taco {

/// Weighted isotonic regression by pool-adjacent-violators.
///
/// Returns the nondecreasing v minimizing sum_t w_t (v_t - y_t)^2. Pooled
/// blocks take the weighted mean of their targets.
inline std::vector<double> pava(const std::vector<double>& targets,
                                const std::vector<double>& weights) {
    if (targets.size() != weights.size()) {
        throw std::invalid_argument("pava: targets and weights differ in length");
    }
    struct Block {
        double weight;
        double weighted_sum;
        std::size_t count;
        [[nodiscard]] double mean() const { return weighted_sum / weight; }
    };
    std::vector<Block> blocks;
    blocks.reserve(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
        if (!(weights[t] > 0.0)) throw std::invalid_argument("pava: weights must be positive");
        blocks.push_back({weights[t], weights[t] * targets[t], 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            Block top = blocks.back();
            blocks.pop_back();
            blocks.back().weight += top.weight;
            blocks.back().weighted_sum += top.weighted_sum;
            blocks.back().count += top.count;
        }
    }
    std::vector<double> out;
    out.reserve(targets.size());
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean());
    return out;
}

/// Aircraft approaching a shared waypoint.
struct WaypointScenario {
    std::vector<double> eta;      ///< e_i
    std::vector<double> urgency;  ///< k_i > 0
    double separation = 1.0;      ///< D > 0

    [[nodiscard]] std::size_t agents() const noexcept { return eta.size(); }

    void validate() const {
        if (eta.empty() || urgency.size() != eta.size()) {
            throw std::invalid_argument("WaypointScenario: eta and urgency must match and be nonempty");
        }
        for (double k : urgency) {
            if (!(k > 0.0)) throw std::invalid_argument("WaypointScenario: urgency must be positive");
        }
        if (!(separation > 0.0)) {
            throw std::invalid_argument("WaypointScenario: separation must be positive");
        }
    }
};

/// Minimizer of sum_i k_i x_i^2 subject to u_{order[t+1]} - u_{order[t]} >= D, u = e + x.
///
/// Shifting v_t = u_{order[t]} - t D turns the separation chain into v
/// nondecreasing, which is isotonic regression of e_{order[t]} - t D with
/// weights k_{order[t]}.
inline std::vector<double> solve_ordering(const WaypointScenario& scenario,
                                          const std::vector<std::size_t>& order) {
    scenario.validate();
    const auto n = scenario.agents();
    if (order.size() != n) throw std::invalid_argument("solve_ordering: order has wrong length");
    std::vector<bool> seen(n, false);
    for (auto a : order) {
        if (a >= n || seen[a]) throw std::invalid_argument("solve_ordering: not a permutation");
        seen[a] = true;
    }
    std::vector<double> targets(n), weights(n);
    for (std::size_t t = 0; t < n; ++t) {
        targets[t] = scenario.eta[order[t]] - static_cast<double>(t) * scenario.separation;
        weights[t] = scenario.urgency[order[t]];
    }
    const auto v = pava(targets, weights);
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double u = v[t] + static_cast<double>(t) * scenario.separation;
        x[order[t]] = u - scenario.eta[order[t]];
    }
    return x;
}

class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One option per arrival ordering (lexicographic), C_ij = k_i x_i^2 under ordering j.
inline ChoiceProblem enumerate_options(const WaypointScenario& scenario,
                                       std::vector<double> valuations,
                                       std::size_t max_agents = 7) {
    scenario.validate();
    const auto n = scenario.agents();
    if (n > max_agents) {
        throw ResourceLimitError("enumerate_options: " + std::to_string(n) +
                                 "! orderings exceed the configured cap (n <= " +
                                 std::to_string(max_agents) + ")");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::vector<double>> columns;
    std::vector<std::string> labels;
    do {
        const auto x = solve_ordering(scenario, order);
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = scenario.urgency[i] * x[i] * x[i];
        columns.push_back(std::move(col));
        std::string label;
        for (std::size_t t = 0; t < n; ++t) {
            if (t) label += '>';
            label += std::to_string(order[t] + 1);
        }
        labels.push_back(std::move(label));
    } while (std::next_permutation(order.begin(), order.end()));

    ChoiceProblem p;
    p.cost = Matrix<double>(n, columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        for (std::size_t i = 0; i < n; ++i) p.cost(i, j) = columns[j][i];
    }
    p.valuations = std::move(valuations);
    p.option_labels = std::move(labels);
    p.validate();
    return p;
}

/// Sampling ranges for random waypoint instances. ETAs are drawn from
/// [0, eta_span_per_agent * n * D).
struct WaypointSampling {
    double separation = 6.0;
    double eta_span_per_agent = 1.0;
    double urgency_min = 0.5;
    double urgency_max = 2.0;
    double valuation_min = 0.5;
    double valuation_max = 1.5;
};

/// Draws e (all agents), then k, then b, from one stream.
inline ChoiceProblem sample_waypoint_problem(std::size_t n, Rng& rng,
                                             const WaypointSampling& s = {},
                                             std::size_t max_agents = 7) {
    WaypointScenario sc;
    sc.separation = s.separation;
    const double span = s.eta_span_per_agent * static_cast<double>(n) * s.separation;
    for (std::size_t i = 0; i < n; ++i) sc.eta.push_back(rng.uniform(0.0, span));
    for (std::size_t i = 0; i < n; ++i) sc.urgency.push_back(rng.uniform(s.urgency_min, s.urgency_max));
    std::vector<double> b;
    for (std::size_t i = 0; i < n; ++i) b.push_back(rng.uniform(s.valuation_min, s.valuation_max));
    return enumerate_options(sc, std::move(b), max_agents);
}

/// C_ij, b_i ~ Uniform(0, 1), drawn row-major for C and then b.
inline ChoiceProblem random_problem(std::size_t n, std::size_t m, Rng& rng) {
    if (n == 0 || m == 0) throw std::invalid_argument("random_problem: empty dimensions");
    ChoiceProblem p;
    p.cost = Matrix<double>(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) p.cost(i, j) = rng.uniform();
    }
    for (std::size_t i = 0; i < n; ++i) {
        double b = rng.uniform();
        while (b == 0.0) b = rng.uniform();
        p.valuations.push_back(b);
    }
    return p;
}

/// Two agents, two choices: the running example.
inline ChoiceProblem example2_fixture() {
    ChoiceProblem p;
    p.cost = Matrix<double>::from_rows({{10.0, 4.0}, {7.0, 9.0}});
    p.valuations = {0.8, 1.2};
    p.option_labels = {"1", "2"};
    return p;
}

}  // namespace taco
