#pragma once

#include "taco/engine.hpp"
#include "taco/problem.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace taco {

/// One row of a step table: the board the playing agent saw, the full profit
/// matrix at that moment and every agent's selection after the step.
struct StepRow {
    std::size_t step = 0;
    std::size_t agent = 0;
    Matrix<ExactAmount> offers;
    Matrix<ExactAmount> payments;
    Matrix<double> profits;
    std::vector<std::optional<std::size_t>> selections;
};

/// Rebuilds the per-step boards of a finished run from its selection log.
/// Uses every agent's private data, so it is an offline reporting tool.
inline std::vector<StepRow> tabulate_run(const ChoiceProblem& problem, const TacoConfig& config,
                                         const TacoOutcome& outcome) {
    const auto n = problem.agents();
    const auto m = problem.choices();
    PublicBoard board(n, m, config.d0);
    std::vector<bool> reduces_at(outcome.steps + 2, false);
    for (const auto& c : outcome.cycles) reduces_at.at(c.end_step) = true;

    std::vector<StepRow> rows;
    rows.reserve(outcome.selection_log.size());
    for (std::size_t k = 0; k < outcome.selection_log.size(); ++k) {
        const auto& sel = outcome.selection_log[k];
        StepRow row;
        row.step = k + 1;
        row.agent = sel.agent;
        row.offers = board.offers();
        row.payments = board.payments();
        row.profits = Matrix<double>(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                row.profits(i, j) =
                    problem.valuations[i] * board.net()(i, j).to_double() - problem.cost(i, j);
            }
        }
        const bool last = (k + 1 == outcome.selection_log.size());
        if (reduces_at[k + 1]) board.reduce_trading_unit(config.gamma);
        if (last && outcome.terminated_naturally) {
            board.announce_selection(sel.agent, sel.choice);
        } else {
            board.apply_selection(sel.agent, sel.choice);
        }
        row.selections = board.selections();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace taco
