#pragma once

#include "taco/exact.hpp"
#include "taco/matrix.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace taco {

/// Broadcast-visible auction state.
///
/// Holds the offer matrix O, the pay matrix P, the current trading unit d,
/// the step counter, each agent's most recent selection and the number of
/// trading-unit reductions so far. Agents and choices are 0-based.
class PublicBoard {
public:
    PublicBoard(std::size_t n, std::size_t m, ExactAmount d0)
        : n_(n), m_(m), offers_(n, m), payments_(n, m), net_(n, m), lattice_(n, m, 0),
          d_(std::move(d0)), selections_(n) {
        if (n == 0 || m == 0) {
            throw std::invalid_argument("PublicBoard: agent and choice counts must be positive");
        }
        if (d_.sign() <= 0) {
            throw std::invalid_argument("PublicBoard: trading unit must be positive");
        }
    }

    [[nodiscard]] std::size_t agents() const noexcept { return n_; }
    [[nodiscard]] std::size_t choices() const noexcept { return m_; }
    [[nodiscard]] const Matrix<ExactAmount>& offers() const noexcept { return offers_; }
    [[nodiscard]] const Matrix<ExactAmount>& payments() const noexcept { return payments_; }
    /// O - P, maintained incrementally.
    [[nodiscard]] const Matrix<ExactAmount>& net() const noexcept { return net_; }
    /// (O - P) minus its value when the current trading unit took effect, in units of d.
    [[nodiscard]] const Matrix<std::int64_t>& lattice_offsets() const noexcept { return lattice_; }
    [[nodiscard]] const ExactAmount& trading_unit() const noexcept { return d_; }
    [[nodiscard]] std::size_t step() const noexcept { return step_; }
    [[nodiscard]] std::size_t epoch() const noexcept { return epoch_; }
    [[nodiscard]] const std::vector<std::optional<std::size_t>>& selections() const noexcept {
        return selections_;
    }

    /// Agent i pays n*d for choice j; every agent is offered d more for j.
    void apply_selection(std::size_t agent, std::size_t choice) {
        if (agent >= n_ || choice >= m_) {
            throw std::invalid_argument("apply_selection: index out of range");
        }
        const ExactAmount paid = ExactAmount(static_cast<long>(n_)) * d_;
        payments_(agent, choice) += paid;
        net_(agent, choice) -= paid;
        lattice_(agent, choice) -= static_cast<std::int64_t>(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            offers_(k, choice) += d_;
            net_(k, choice) += d_;
            lattice_(k, choice) += 1;
        }
        selections_[agent] = choice;
        ++step_;
    }

    /// Broadcasts a selection without trading on it (the closing turn of a terminating run).
    void announce_selection(std::size_t agent, std::size_t choice) {
        if (agent >= n_ || choice >= m_) {
            throw std::invalid_argument("announce_selection: index out of range");
        }
        selections_[agent] = choice;
    }

    /// d <- gamma * d. The lattice offsets restart from the current state.
    void reduce_trading_unit(const ExactAmount& gamma) {
        if (gamma.sign() <= 0 || gamma >= ExactAmount(1)) {
            throw std::invalid_argument("reduce_trading_unit: gamma must lie in (0, 1)");
        }
        d_ *= gamma;
        ++epoch_;
        lattice_ = Matrix<std::int64_t>(n_, m_, 0);
    }

private:
    std::size_t n_;
    std::size_t m_;
    Matrix<ExactAmount> offers_;
    Matrix<ExactAmount> payments_;
    Matrix<ExactAmount> net_;
    Matrix<std::int64_t> lattice_;
    ExactAmount d_;
    std::size_t step_ = 0;
    std::size_t epoch_ = 0;
    std::vector<std::optional<std::size_t>> selections_;
};

inline PublicBoard new_board(std::size_t n, std::size_t m, ExactAmount d0) {
    return PublicBoard(n, m, std::move(d0));
}

/// Recorded state: the exact net matrix O - P seen by the playing agent at its turn,
/// together with that agent's index.
struct StateKey {
    Matrix<ExactAmount> net;
    std::size_t playing_agent = 0;

    static StateKey of(const PublicBoard& board, std::size_t agent) { return {board.net(), agent}; }

    friend bool operator==(const StateKey&, const StateKey&) = default;
};

/// Same state as StateKey, expressed as integer offsets in units of the current
/// trading unit. Two keys recorded under the same trading unit are equal iff
/// the corresponding StateKeys are equal; histories never span a reduction.
struct LatticeKey {
    Matrix<std::int64_t> offsets;
    std::size_t playing_agent = 0;

    static LatticeKey of(const PublicBoard& board, std::size_t agent) {
        return {board.lattice_offsets(), agent};
    }

    friend bool operator==(const LatticeKey&, const LatticeKey&) = default;
};

namespace detail {
inline void hash_combine(std::uint64_t& h, std::uint64_t x) {
    h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}
}  // namespace detail

struct StateKeyHash {
    std::size_t operator()(const StateKey& key) const noexcept {
        std::uint64_t h = key.playing_agent;
        for (const auto& v : key.net.data()) {
            detail::hash_combine(h, v.hash());
        }
        return static_cast<std::size_t>(h);
    }
};

struct LatticeKeyHash {
    std::size_t operator()(const LatticeKey& key) const noexcept {
        std::uint64_t h = key.playing_agent;
        for (auto v : key.offsets.data()) {
            detail::hash_combine(h, static_cast<std::uint64_t>(v) * 0xff51afd7ed558ccdULL);
        }
        return static_cast<std::size_t>(h);
    }
};

struct Selection {
    std::size_t agent = 0;
    std::size_t choice = 0;
};

/// A detected recurrence of the recorded state.
///
/// The span covers steps [start_step, end_step] (1-based step numbers): the
/// steps strictly after the first occurrence through the recurrence.
struct CycleRecord {
    std::size_t start_step = 0;
    std::size_t end_step = 0;
    std::vector<std::size_t> active_choices;
    Matrix<std::uint32_t> choice_counts;
    /// For each agent, the profit rows it observed at its own turns within the span.
    std::vector<std::vector<std::vector<double>>> agent_turn_profits;
    ExactAmount d_at_detection;

    [[nodiscard]] std::size_t length() const noexcept { return end_step - start_step + 1; }

    /// Every agent selected each choice equally often.
    [[nodiscard]] bool has_uniform_choice_counts() const {
        for (std::size_t i = 1; i < choice_counts.rows(); ++i) {
            if (!std::equal(choice_counts.row(i).begin(), choice_counts.row(i).end(),
                            choice_counts.row(0).begin())) {
                return false;
            }
        }
        return true;
    }
};

class HistoryCapacityError : public std::runtime_error {
public:
    explicit HistoryCapacityError(std::size_t cap)
        : std::runtime_error("state history exceeded its capacity of " + std::to_string(cap) +
                             " entries") {}
};

/// Map from recorded state to the step at which it was recorded.
template <class Key, class Hash>
class StateHistory {
public:
    explicit StateHistory(std::size_t capacity = 1'000'000) : capacity_(capacity) {}

    [[nodiscard]] std::optional<std::size_t> find(const Key& key) const {
        auto it = seen_.find(key);
        if (it == seen_.end()) return std::nullopt;
        return it->second;
    }

    void insert(Key key, std::size_t step) {
        if (seen_.size() >= capacity_) {
            throw HistoryCapacityError(capacity_);
        }
        seen_.insert_or_assign(std::move(key), step);
    }

    void clear() { seen_.clear(); }
    [[nodiscard]] std::size_t size() const noexcept { return seen_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }

private:
    std::size_t capacity_;
    std::unordered_map<Key, std::size_t, Hash> seen_;
};

using ExactHistory = StateHistory<StateKey, StateKeyHash>;
using LatticeHistory = StateHistory<LatticeKey, LatticeKeyHash>;

/// Builds the span statistics for steps (first_step, current_step] from the selection log.
/// selection_log[k] is the selection made at step k + 1.
inline CycleRecord make_cycle_record(std::size_t first_step, std::size_t current_step,
                                     const std::vector<Selection>& selection_log, std::size_t n,
                                     std::size_t m, const ExactAmount& d) {
    if (current_step <= first_step || current_step > selection_log.size()) {
        throw std::invalid_argument("make_cycle_record: invalid span");
    }
    CycleRecord rec;
    rec.start_step = first_step + 1;
    rec.end_step = current_step;
    rec.choice_counts = Matrix<std::uint32_t>(n, m, 0);
    rec.agent_turn_profits.resize(n);
    rec.d_at_detection = d;
    std::vector<bool> active(m, false);
    for (std::size_t s = rec.start_step; s <= rec.end_step; ++s) {
        const auto& sel = selection_log[s - 1];
        ++rec.choice_counts(sel.agent, sel.choice);
        active[sel.choice] = true;
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (active[j]) rec.active_choices.push_back(j);
    }
    return rec;
}

/// Returns a cycle if `key` was already recorded; otherwise records it at `current_step`.
template <class Key, class Hash>
std::optional<CycleRecord> record_and_detect(StateHistory<Key, Hash>& history, const Key& key,
                                             std::size_t current_step,
                                             const std::vector<Selection>& selection_log,
                                             std::size_t n, std::size_t m, const ExactAmount& d) {
    if (auto first = history.find(key)) {
        return make_cycle_record(*first, current_step, selection_log, n, m, d);
    }
    history.insert(key, current_step);
    return std::nullopt;
}

}  // namespace taco
