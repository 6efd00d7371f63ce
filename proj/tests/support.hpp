#pragma once

// Shared generators and reference implementations for the test suites.
// The reference engine below is written from the protocol rules directly and
// shares no code with include/taco beyond the problem container and the RNG.

#include "taco/problem.hpp"
#include "taco/random.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace taco::test {

/// Uniform instance with n in [1, max_n], m in [1, max_m].
inline ChoiceProblem random_instance(Rng& rng, std::size_t max_n, std::size_t max_m) {
    const std::size_t n = 1 + rng.index(max_n);
    const std::size_t m = 1 + rng.index(max_m);
    ChoiceProblem p;
    p.cost = Matrix<double>(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) p.cost(i, j) = rng.uniform(0.0, 10.0);
    }
    for (std::size_t i = 0; i < n; ++i) p.valuations.push_back(rng.uniform(0.2, 2.0));
    for (std::size_t j = 0; j < m; ++j) p.option_labels.push_back(std::to_string(j + 1));
    return p;
}

/// Rational gamma drawn from {3/10, ..., 99/100}.
inline mpq_class random_gamma(Rng& rng) {
    static const std::vector<std::pair<long, long>> gs = {
        {3, 10}, {1, 2}, {6, 10}, {2, 3}, {3, 4}, {9, 10}, {95, 100}, {99, 100}};
    const auto& g = gs[rng.index(gs.size())];
    mpq_class q(g.first, g.second);
    q.canonicalize();
    return q;
}

/// One recorded turn of the reference engine.
struct RefTurn {
    std::size_t agent = 0;
    std::size_t choice = 0;
    std::vector<mpq_class> net_before;  ///< row-major O - P seen at this turn
    mpq_class d_traded;                 ///< unit used for this turn's trade (0 if not traded)
    std::vector<double> profit_row;     ///< playing agent's row before selecting
};

struct RefRun {
    std::vector<RefTurn> turns;
    std::vector<std::size_t> cycle_ends;  ///< 1-based steps at which a recurrence was found
    std::vector<std::vector<mpq_class>> offers_after;    ///< row-major O after each turn
    std::vector<std::vector<mpq_class>> payments_after;  ///< row-major P after each turn
    std::vector<std::optional<std::size_t>> selections;
    std::size_t consensus = 0;
    std::vector<mpq_class> settlements;
    bool terminated = false;
};

/// Direct transcription of the protocol: cyclic turns, best response with lowest-index ties,
/// recurrence of (agent, O - P) at the start of a turn, reduce d before trading on a hit,
/// stop when every agent's own-turn spread over the active choices is below epsilon.
inline RefRun reference_run(const ChoiceProblem& p, const mpq_class& d0, const mpq_class& gamma,
                            double epsilon, std::size_t max_steps) {
    const std::size_t n = p.agents();
    const std::size_t m = p.choices();
    std::vector<mpq_class> O(n * m, 0), P(n * m, 0);
    mpq_class d = d0;
    std::map<std::pair<std::size_t, std::vector<std::string>>, std::size_t> seen;
    RefRun run;
    run.selections.assign(n, std::nullopt);

    auto net = [&] {
        std::vector<mpq_class> out(n * m);
        for (std::size_t k = 0; k < n * m; ++k) out[k] = O[k] - P[k];
        return out;
    };
    auto key_of = [&](std::size_t agent, const std::vector<mpq_class>& x) {
        std::vector<std::string> s;
        for (const auto& v : x) s.push_back(v.get_str());
        return std::make_pair(agent, s);
    };

    for (std::size_t step = 1; step <= max_steps; ++step) {
        const std::size_t i = (step - 1) % n;
        RefTurn turn;
        turn.agent = i;
        turn.net_before = net();
        for (std::size_t j = 0; j < m; ++j) {
            turn.profit_row.push_back(p.valuations[i] * turn.net_before[i * m + j].get_d() -
                                      p.cost(i, j));
        }
        std::size_t best = 0;
        for (std::size_t j = 1; j < m; ++j) {
            if (turn.profit_row[j] > turn.profit_row[best]) best = j;
        }
        turn.choice = best;
        run.turns.push_back(turn);

        const auto key = key_of(i, turn.net_before);
        auto it = seen.find(key);
        bool stop = false;
        if (it != seen.end()) {
            const std::size_t first = it->second;
            run.cycle_ends.push_back(step);
            std::vector<bool> active(m, false);
            for (std::size_t s = first + 1; s <= step; ++s) active[run.turns[s - 1].choice] = true;
            stop = true;
            for (std::size_t a = 0; a < n; ++a) {
                double lo = INFINITY, hi = -INFINITY;
                for (std::size_t s = first + 1; s <= step; ++s) {
                    if (run.turns[s - 1].agent != a) continue;
                    for (std::size_t j = 0; j < m; ++j) {
                        if (!active[j]) continue;
                        lo = std::min(lo, run.turns[s - 1].profit_row[j]);
                        hi = std::max(hi, run.turns[s - 1].profit_row[j]);
                    }
                }
                if (lo <= hi && !(hi - lo < epsilon)) stop = false;
            }
            d *= gamma;
            seen.clear();
        }
        run.selections[i] = best;
        if (stop) {
            run.turns.back().d_traded = 0;
            run.offers_after.push_back(O);
            run.payments_after.push_back(P);
            run.terminated = true;
            break;
        }
        P[i * m + best] += d * static_cast<long>(n);
        for (std::size_t k = 0; k < n; ++k) O[k * m + best] += d;
        run.turns.back().d_traded = d;
        run.offers_after.push_back(O);
        run.payments_after.push_back(P);
        seen[key_of(i, turn.net_before)] = step;
    }

    std::vector<std::size_t> counts(m, 0);
    for (const auto& s : run.selections) {
        if (s) ++counts[*s];
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (counts[j] > counts[run.consensus]) run.consensus = j;
    }
    for (std::size_t i = 0; i < n; ++i) {
        run.settlements.push_back(O[i * m + run.consensus] - P[i * m + run.consensus]);
    }
    return run;
}

}  // namespace taco::test
