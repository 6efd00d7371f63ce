#pragma once

#include "taco/problem.hpp"
#include "taco/random.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace taco {

namespace detail {
inline std::size_t argmin_first(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < values.size(); ++j) {
        if (values[j] < values[best]) best = j;
    }
    return best;
}
}  // namespace detail

/// Lowest-cost option of one agent (lowest index on ties).
inline std::size_t preferred_option(const ChoiceProblem& problem, std::size_t agent) {
    return detail::argmin_first(problem.cost.row(agent));
}

/// Plurality vote: one vote per agent for its preferred option; ties drawn uniformly from rng.
inline std::size_t voting(const ChoiceProblem& problem, Rng& rng) {
    std::vector<std::size_t> votes(problem.choices(), 0);
    for (std::size_t i = 0; i < problem.agents(); ++i) ++votes[preferred_option(problem, i)];
    const auto top = *std::max_element(votes.begin(), votes.end());
    std::vector<std::size_t> winners;
    for (std::size_t j = 0; j < votes.size(); ++j) {
        if (votes[j] == top) winners.push_back(j);
    }
    if (winners.size() == 1) return winners.front();
    return winners[rng.index(winners.size())];
}

inline std::size_t random_dictator(const ChoiceProblem& problem, Rng& rng) {
    return preferred_option(problem, rng.index(problem.agents()));
}

/// argmin_j sum_i C_ij.
inline std::size_t utilitarian(const ChoiceProblem& problem) {
    std::vector<double> totals(problem.choices(), 0.0);
    for (std::size_t i = 0; i < problem.agents(); ++i) {
        for (std::size_t j = 0; j < problem.choices(); ++j) totals[j] += problem.cost(i, j);
    }
    return detail::argmin_first(totals);
}

/// argmin_j max_i C_ij.
inline std::size_t egalitarian(const ChoiceProblem& problem) {
    std::vector<double> worst(problem.choices(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < problem.agents(); ++i) {
        for (std::size_t j = 0; j < problem.choices(); ++j) {
            worst[j] = std::max(worst[j], problem.cost(i, j));
        }
    }
    return detail::argmin_first(worst);
}

}  // namespace taco
