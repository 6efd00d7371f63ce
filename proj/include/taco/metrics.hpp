#pragma once

#include "taco/baselines.hpp"
#include "taco/engine.hpp"
#include "taco/problem.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace taco {

class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// sum(costs) / sum(utilitarian_costs) - 1.
inline double optimality_gap(const std::vector<double>& costs,
                             const std::vector<double>& utilitarian_costs) {
    const double base = std::accumulate(utilitarian_costs.begin(), utilitarian_costs.end(), 0.0);
    if (!(base > 0.0)) {
        throw UndefinedMetricError("optimality_gap: utilitarian total cost must be positive");
    }
    return std::accumulate(costs.begin(), costs.end(), 0.0) / base - 1.0;
}

/// Mean absolute difference over all ordered pairs, normalized by 2 n sum(c).
inline double gini(const std::vector<double>& costs) {
    const double total = std::accumulate(costs.begin(), costs.end(), 0.0);
    if (costs.empty() || !(total > 0.0)) {
        throw UndefinedMetricError("gini: total cost must be positive");
    }
    double pairs = 0.0;
    for (double a : costs) {
        for (double b : costs) pairs += std::abs(a - b);
    }
    return pairs / (2.0 * static_cast<double>(costs.size()) * total);
}

enum class CostMode { raw, settled };

/// raw: C_{i,j*}. settled: C_{i,j*} - b_i pi_i.
inline std::vector<double> effective_costs(const ChoiceProblem& problem, std::size_t chosen,
                                           const std::vector<ExactAmount>& settlements,
                                           CostMode mode) {
    auto costs = problem.column(chosen);
    if (mode == CostMode::settled) {
        if (settlements.size() != costs.size()) {
            throw std::invalid_argument("effective_costs: one settlement per agent required");
        }
        for (std::size_t i = 0; i < costs.size(); ++i) {
            costs[i] -= problem.valuations[i] * settlements[i].to_double();
        }
    }
    return costs;
}

inline std::vector<double> effective_costs(const ChoiceProblem& problem,
                                           const TacoOutcome& outcome, CostMode mode) {
    return effective_costs(problem, outcome.consensus_choice, outcome.settlements, mode);
}

/// Worst-case steps TACo can spend inside cycles before epsilon-termination.
struct TerminationBound {
    std::uint64_t cycles = 0;
    double log_steps_per_cycle = 0.0;  ///< ln(n ((m+1)(n-1))^(nm)); -inf when n = 1
    double log_total = 0.0;            ///< ln(cycles * steps_per_cycle); -inf when either is 0
    std::string steps_per_cycle;       ///< exact decimal
    std::string total;                 ///< exact decimal
};

inline TerminationBound termination_bound(std::size_t n, std::size_t m, const ExactAmount& gamma,
                                          double epsilon, const ExactAmount& d0, double b_max) {
    if (n == 0 || m == 0) throw std::invalid_argument("termination_bound: n and m must be positive");
    if (gamma.sign() <= 0 || gamma >= ExactAmount(1)) {
        throw std::invalid_argument("termination_bound: gamma must lie in (0, 1)");
    }
    if (!(epsilon > 0.0) || d0.sign() <= 0 || !(b_max > 0.0)) {
        throw std::invalid_argument("termination_bound: epsilon, d0 and b_max must be positive");
    }
    TerminationBound out;
    const double basis = static_cast<double>(m + 1) * d0.to_double() * static_cast<double>(n - 1) * b_max;
    if (epsilon < basis) {
        // ceil(log_gamma(epsilon / basis)); values within 1e-9 of an integer are snapped to it.
        const double c = std::log(epsilon / basis) / std::log(gamma.to_double());
        const double snapped = std::round(c);
        const double k = std::abs(c - snapped) < 1e-9 ? snapped : std::ceil(c);
        out.cycles = static_cast<std::uint64_t>(std::max(0.0, k));
    }

    const std::uint64_t base = static_cast<std::uint64_t>((m + 1) * (n - 1));
    mpz_class per_cycle;
    mpz_ui_pow_ui(per_cycle.get_mpz_t(), base, static_cast<unsigned long>(n * m));
    per_cycle *= static_cast<unsigned long>(n);
    const mpz_class total = per_cycle * static_cast<unsigned long>(out.cycles);
    out.steps_per_cycle = per_cycle.get_str();
    out.total = total.get_str();

    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    out.log_steps_per_cycle = base == 0 ? neg_inf
                                        : std::log(static_cast<double>(n)) +
                                              static_cast<double>(n * m) *
                                                  std::log(static_cast<double>(base));
    out.log_total = (out.cycles == 0 || base == 0)
                        ? neg_inf
                        : std::log(static_cast<double>(out.cycles)) + out.log_steps_per_cycle;
    return out;
}

/// Per-agent cycle spread bound (p + 1) d (n - 1) b_i, with p active choices.
inline double cycle_spread_bound(const CycleRecord& cycle, double valuation) {
    const double p = static_cast<double>(cycle.active_choices.size());
    const double n = static_cast<double>(cycle.choice_counts.rows());
    return (p + 1.0) * cycle.d_at_detection.to_double() * (n - 1.0) * valuation;
}

/// Largest observed spread divided by its bound over all agents of one cycle.
/// A zero spread under a zero bound counts as 0.
inline double cycle_spread_ratio(const CycleRecord& cycle, const std::vector<double>& valuations) {
    const auto spreads = observed_spreads(cycle);
    double worst = 0.0;
    for (std::size_t i = 0; i < spreads.size(); ++i) {
        const double bound = cycle_spread_bound(cycle, valuations.at(i));
        if (spreads[i] <= 0.0) continue;
        worst = std::max(worst, bound > 0.0 ? spreads[i] / bound
                                            : std::numeric_limits<double>::infinity());
    }
    return worst;
}

inline double max_cycle_spread_ratio(const TacoOutcome& outcome,
                                     const std::vector<double>& valuations) {
    double worst = 0.0;
    for (const auto& c : outcome.cycles) worst = std::max(worst, cycle_spread_ratio(c, valuations));
    return worst;
}

/// One mechanism's result on one instance.
struct TrialResult {
    std::string mechanism;
    std::size_t chosen_option = 0;
    std::vector<double> raw_costs;
    std::vector<double> settled_costs;
    std::size_t steps = 0;
    std::size_t rounds = 0;
    std::size_t cycles_detected = 0;
    double og_raw = std::numeric_limits<double>::quiet_NaN();
    double og_settled = std::numeric_limits<double>::quiet_NaN();
    double gini_raw = std::numeric_limits<double>::quiet_NaN();
    double gini_settled = std::numeric_limits<double>::quiet_NaN();
    double max_cycle_spread_ratio = 0.0;
};

namespace detail {
template <class F>
double metric_or_nan(F&& f) {
    try {
        return f();
    } catch (const UndefinedMetricError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}
}  // namespace detail

/// Fills chosen option, costs and metrics. Undefined metrics are left as NaN.
inline TrialResult evaluate_choice(std::string mechanism, const ChoiceProblem& problem,
                                   std::size_t chosen, const std::vector<ExactAmount>& settlements) {
    TrialResult r;
    r.mechanism = std::move(mechanism);
    r.chosen_option = chosen;
    r.raw_costs = effective_costs(problem, chosen, settlements, CostMode::raw);
    r.settled_costs = settlements.empty()
                          ? r.raw_costs
                          : effective_costs(problem, chosen, settlements, CostMode::settled);
    const auto best = problem.column(utilitarian(problem));
    r.og_raw = detail::metric_or_nan([&] { return optimality_gap(r.raw_costs, best); });
    r.og_settled = detail::metric_or_nan([&] { return optimality_gap(r.settled_costs, best); });
    r.gini_raw = detail::metric_or_nan([&] { return gini(r.raw_costs); });
    r.gini_settled = detail::metric_or_nan([&] { return gini(r.settled_costs); });
    return r;
}

}  // namespace taco
