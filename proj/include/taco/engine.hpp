#pragma once

#include "taco/agent.hpp"
#include "taco/board.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace taco {

/// Which representation the engine uses for recorded states.
enum class KeyMode {
    lattice,        ///< integer offsets in units of the current trading unit
    exact_rational  ///< full rational O - P matrix
};

struct TacoConfig {
    ExactAmount d0{1};
    ExactAmount gamma{9, 10};
    double epsilon = 1e-6;
    std::size_t max_steps = 1'000'000;
    /// Permutation of agents; empty means 0, 1, ..., n-1.
    std::vector<std::size_t> turn_order;
    std::size_t history_capacity = 1'000'000;
    KeyMode key_mode = KeyMode::lattice;
    bool record_trace = true;

    void validate(std::size_t n) const {
        if (d0.sign() <= 0) throw std::invalid_argument("TacoConfig: d0 must be positive");
        if (gamma.sign() <= 0 || gamma >= ExactAmount(1)) {
            throw std::invalid_argument("TacoConfig: gamma must lie in (0, 1)");
        }
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
            throw std::invalid_argument("TacoConfig: epsilon must be positive");
        }
        if (max_steps == 0) throw std::invalid_argument("TacoConfig: max_steps must be positive");
        if (history_capacity == 0) {
            throw std::invalid_argument("TacoConfig: history_capacity must be positive");
        }
        if (!turn_order.empty()) {
            if (turn_order.size() != n) {
                throw std::invalid_argument("TacoConfig: turn_order must list every agent once");
            }
            std::vector<bool> seen(n, false);
            for (auto a : turn_order) {
                if (a >= n || seen[a]) {
                    throw std::invalid_argument("TacoConfig: turn_order is not a permutation");
                }
                seen[a] = true;
            }
        }
    }
};

struct TraceEntry {
    std::size_t step = 0;
    std::size_t agent = 0;
    std::size_t choice = 0;
    /// The playing agent's profit row before its selection.
    std::vector<double> profit_row;
};

struct TacoOutcome {
    std::size_t consensus_choice = 0;
    /// pi_i = O_{i,j*} - P_{i,j*}; positive means the agent is paid.
    std::vector<ExactAmount> settlements;
    std::size_t steps = 0;
    std::size_t rounds = 0;
    std::size_t cycles_detected = 0;
    ExactAmount final_d;
    std::vector<TraceEntry> trace;
    bool terminated_naturally = false;
    std::vector<CycleRecord> cycles;
    std::vector<Selection> selection_log;

    /// pi_i with the opposite sign convention (amount paid out).
    [[nodiscard]] std::vector<ExactAmount> settlements_paid() const {
        std::vector<ExactAmount> out;
        out.reserve(settlements.size());
        for (const auto& s : settlements) out.push_back(-s);
        return out;
    }
};

/// Raised when the safety cap on steps is reached before termination.
class NoTerminationError : public std::runtime_error {
public:
    explicit NoTerminationError(TacoOutcome partial)
        : std::runtime_error("TACo did not terminate within " + std::to_string(partial.steps) +
                             " steps"),
          partial_(std::move(partial)) {}

    [[nodiscard]] const TacoOutcome& partial() const noexcept { return partial_; }

private:
    TacoOutcome partial_;
};

/// Raised when a detected cycle contradicts a structural property of the protocol.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline std::size_t rounds_for(std::size_t steps, std::size_t n) { return (steps + n - 1) / n; }

/// Most frequent recorded selection, lowest index on ties. Agents that never played are skipped.
inline std::size_t mode_of_selections(const std::vector<std::optional<std::size_t>>& selections,
                                      std::size_t m) {
    std::vector<std::size_t> counts(m, 0);
    for (const auto& s : selections) {
        if (s) ++counts[*s];
    }
    return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) -
                                    counts.begin());
}

/// True iff every agent's observed profit spread over the cycle's active choices is below epsilon.
inline bool check_termination(const CycleRecord& cycle, double epsilon) {
    for (const auto& rows : cycle.agent_turn_profits) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& row : rows) {
            for (auto j : cycle.active_choices) {
                lo = std::min(lo, row[j]);
                hi = std::max(hi, row[j]);
            }
        }
        if (rows.empty() || cycle.active_choices.empty()) continue;
        if (!(hi - lo < epsilon)) return false;
    }
    return true;
}

/// Largest per-agent spread observed in a cycle, one entry per agent.
inline std::vector<double> observed_spreads(const CycleRecord& cycle) {
    std::vector<double> out;
    out.reserve(cycle.agent_turn_profits.size());
    for (const auto& rows : cycle.agent_turn_profits) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& row : rows) {
            for (auto j : cycle.active_choices) {
                lo = std::min(lo, row[j]);
                hi = std::max(hi, row[j]);
            }
        }
        out.push_back(rows.empty() ? 0.0 : hi - lo);
    }
    return out;
}

inline std::vector<ExactAmount> settle(const PublicBoard& board, std::size_t j_star) {
    if (j_star >= board.choices()) throw std::invalid_argument("settle: choice out of range");
    std::vector<ExactAmount> out;
    out.reserve(board.agents());
    for (std::size_t i = 0; i < board.agents(); ++i) {
        out.push_back(board.offers()(i, j_star) - board.payments()(i, j_star));
    }
    return out;
}

namespace detail {

inline void check_agents(const std::vector<AgentPrivate>& agents) {
    if (agents.empty()) throw std::invalid_argument("run_taco: no agents");
    const auto m = agents.front().cost_row().size();
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (agents[i].index() != i) {
            throw std::invalid_argument("run_taco: agents must be listed in index order");
        }
        if (agents[i].cost_row().size() != m) {
            throw std::invalid_argument("run_taco: agents disagree on the number of choices");
        }
    }
}

template <class Key, class Hash>
TacoOutcome run_loop(const TacoConfig& config, const std::vector<AgentPrivate>& agents,
                     std::size_t interrupt_step) {
    check_agents(agents);
    const std::size_t n = agents.size();
    const std::size_t m = agents.front().cost_row().size();
    config.validate(n);

    std::vector<std::size_t> order = config.turn_order;
    if (order.empty()) {
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
    }

    PublicBoard board(n, m, config.d0);
    StateHistory<Key, Hash> history(config.history_capacity);
    TacoOutcome out;
    // Own-turn profit rows, kept even when the public trace is not recorded.
    std::vector<std::vector<double>> turn_rows;
    std::size_t turns = 0;
    bool converged = false;

    auto finish = [&](bool natural) {
        out.steps = turns;
        out.rounds = rounds_for(out.steps, n);
        out.final_d = board.trading_unit();
        out.terminated_naturally = natural;
        out.consensus_choice = mode_of_selections(board.selections(), m);
        out.settlements = settle(board, out.consensus_choice);
    };

    // Step k: the playing agent reads the board, picks its best response and the
    // pair (agent, O - P) seen at that turn is looked up. On a recurrence the
    // trading unit is reduced before the selection is traded, so the new unit's
    // window starts at this turn; a terminating turn only announces its choice.
    while (!converged) {
        if (turns >= interrupt_step) {
            finish(false);
            return out;
        }
        if (turns >= config.max_steps) {
            finish(false);
            throw NoTerminationError(std::move(out));
        }
        const std::size_t i = order[turns % n];
        auto row = profit_row(agents[i], board);
        const std::size_t choice = argmax_first(row);
        const std::size_t step = ++turns;
        out.selection_log.push_back({i, choice});
        if (config.record_trace) out.trace.push_back({step, i, choice, row});
        turn_rows.push_back(std::move(row));

        Key key = Key::of(board, i);
        if (auto first = history.find(key)) {
            CycleRecord cycle =
                make_cycle_record(*first, step, out.selection_log, n, m, board.trading_unit());
            for (std::size_t s = cycle.start_step; s <= cycle.end_step; ++s) {
                cycle.agent_turn_profits[out.selection_log[s - 1].agent].push_back(
                    turn_rows[s - 1]);
            }
            if (cycle.length() % n != 0) {
                throw InvariantViolation("cycle length is not a multiple of the agent count");
            }
            if (!cycle.has_uniform_choice_counts()) {
                throw InvariantViolation("cycle choice counts differ between agents");
            }
            converged = check_termination(cycle, config.epsilon);
            board.reduce_trading_unit(config.gamma);
            history.clear();
            ++out.cycles_detected;
            out.cycles.push_back(std::move(cycle));
            if (converged) {
                board.announce_selection(i, choice);
                break;
            }
            key = Key::of(board, i);
        }
        board.apply_selection(i, choice);
        history.insert(std::move(key), step);
    }
    finish(true);
    return out;
}

}  // namespace detail

/// Runs the trading auction until epsilon-termination.
inline TacoOutcome run_taco(const TacoConfig& config, const std::vector<AgentPrivate>& agents) {
    constexpr auto never = std::numeric_limits<std::size_t>::max();
    if (config.key_mode == KeyMode::exact_rational) {
        return detail::run_loop<StateKey, StateKeyHash>(config, agents, never);
    }
    return detail::run_loop<LatticeKey, LatticeKeyHash>(config, agents, never);
}

/// As run_taco, but stops after `interrupt_step` steps if it has not terminated and takes the
/// most common current selection as the consensus.
inline TacoOutcome run_interrupted(const TacoConfig& config,
                                   const std::vector<AgentPrivate>& agents,
                                   std::size_t interrupt_step) {
    if (interrupt_step == 0) {
        throw std::invalid_argument("run_interrupted: interrupt_step must be positive");
    }
    if (config.key_mode == KeyMode::exact_rational) {
        return detail::run_loop<StateKey, StateKeyHash>(config, agents, interrupt_step);
    }
    return detail::run_loop<LatticeKey, LatticeKeyHash>(config, agents, interrupt_step);
}

}  // namespace taco
