#pragma once

#include "taco/board.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace taco {

/// One agent's private data: its valuation of the traded asset and its row of the cost matrix.
/// Only the agent's own selection rule reads it.
class AgentPrivate {
public:
    AgentPrivate(std::size_t index, double valuation, std::vector<double> cost_row)
        : index_(index), valuation_(valuation), cost_row_(std::move(cost_row)) {
        if (!(valuation_ > 0.0) || !std::isfinite(valuation_)) {
            throw std::invalid_argument("AgentPrivate: valuation must be positive and finite");
        }
        if (cost_row_.empty()) {
            throw std::invalid_argument("AgentPrivate: empty cost row");
        }
        for (double c : cost_row_) {
            if (!std::isfinite(c)) throw std::invalid_argument("AgentPrivate: non-finite cost");
        }
    }

    [[nodiscard]] std::size_t index() const noexcept { return index_; }
    [[nodiscard]] double valuation() const noexcept { return valuation_; }
    [[nodiscard]] const std::vector<double>& cost_row() const noexcept { return cost_row_; }

private:
    std::size_t index_;
    double valuation_;
    std::vector<double> cost_row_;
};

/// J_ij = b_i (O_ij - P_ij) - C_ij for the agent's own row.
inline std::vector<double> profit_row(const AgentPrivate& agent, const PublicBoard& board) {
    if (agent.index() >= board.agents() || agent.cost_row().size() != board.choices()) {
        throw std::invalid_argument("profit_row: agent does not fit the board");
    }
    const auto net = board.net().row(agent.index());
    std::vector<double> out(board.choices());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = agent.valuation() * net[j].to_double() - agent.cost_row()[j];
    }
    return out;
}

/// Index of the largest entry; the lowest index wins exact ties.
inline std::size_t argmax_first(const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < values.size(); ++j) {
        if (values[j] > values[best]) best = j;
    }
    return best;
}

inline std::size_t best_response(const AgentPrivate& agent, const PublicBoard& board) {
    return argmax_first(profit_row(agent, board));
}

}  // namespace taco
