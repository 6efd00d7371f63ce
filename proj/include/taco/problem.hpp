#pragma once

#include "taco/agent.hpp"
#include "taco/matrix.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace taco {

/// One instance shared by TACo and the baseline mechanisms.
struct ChoiceProblem {
    Matrix<double> cost;              ///< n x m intrinsic cost matrix C
    std::vector<double> valuations;   ///< b, one per agent
    std::vector<std::string> option_labels;

    [[nodiscard]] std::size_t agents() const noexcept { return cost.rows(); }
    [[nodiscard]] std::size_t choices() const noexcept { return cost.cols(); }

    void validate() const {
        if (cost.rows() == 0 || cost.cols() == 0) {
            throw std::invalid_argument("ChoiceProblem: empty cost matrix");
        }
        if (valuations.size() != cost.rows()) {
            throw std::invalid_argument("ChoiceProblem: one valuation per agent required");
        }
        for (double b : valuations) {
            if (!(b > 0.0) || !std::isfinite(b)) {
                throw std::invalid_argument("ChoiceProblem: valuations must be positive");
            }
        }
        for (double c : cost.data()) {
            if (!std::isfinite(c)) throw std::invalid_argument("ChoiceProblem: non-finite cost");
        }
        if (!option_labels.empty() && option_labels.size() != cost.cols()) {
            throw std::invalid_argument("ChoiceProblem: one label per option required");
        }
    }

    /// Splits the instance into per-agent private records.
    [[nodiscard]] std::vector<AgentPrivate> make_agents() const {
        validate();
        std::vector<AgentPrivate> out;
        out.reserve(agents());
        for (std::size_t i = 0; i < agents(); ++i) {
            auto r = cost.row(i);
            out.emplace_back(i, valuations[i], std::vector<double>(r.begin(), r.end()));
        }
        return out;
    }

    /// C_{i,j} for every agent i.
    [[nodiscard]] std::vector<double> column(std::size_t j) const {
        std::vector<double> out(agents());
        for (std::size_t i = 0; i < agents(); ++i) out[i] = cost(i, j);
        return out;
    }
};

}  // namespace taco
