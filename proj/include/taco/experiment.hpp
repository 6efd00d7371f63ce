#pragma once

#include "taco/baselines.hpp"
#include "taco/engine.hpp"
#include "taco/metrics.hpp"
#include "taco/random.hpp"
#include "taco/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace taco {

/// Version of the per-trial CSV column set.
inline constexpr int kCsvSchemaVersion = 1;

enum class ScenarioKind { waypoint, random, example2 };

inline ScenarioKind parse_scenario_kind(const std::string& s) {
    if (s == "waypoint") return ScenarioKind::waypoint;
    if (s == "random") return ScenarioKind::random;
    if (s == "example2") return ScenarioKind::example2;
    throw std::invalid_argument("unknown scenario '" + s + "' (waypoint, random, example2)");
}

inline std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::waypoint: return "waypoint";
        case ScenarioKind::random: return "random";
        case ScenarioKind::example2: return "example2";
    }
    return "?";
}

inline const std::vector<std::string>& all_mechanisms() {
    static const std::vector<std::string> names = {"taco", "voting", "random_dictator",
                                                   "utilitarian", "egalitarian"};
    return names;
}

struct ExperimentConfig {
    ScenarioKind scenario = ScenarioKind::waypoint;
    std::size_t agents = 4;
    std::size_t choices = 24;  ///< random scenario only; waypoint uses n!
    WaypointSampling sampling;
    std::size_t max_waypoint_agents = 7;

    ExactAmount d0{1};
    ExactAmount gamma{9, 10};
    double epsilon = 0.1;
    /// When positive, each trial uses epsilon = epsilon_relative * mean(C) instead.
    double epsilon_relative = 0.0;
    std::size_t max_steps = 1'000'000;
    /// 0 runs to natural termination.
    std::size_t interrupt_step = 0;

    std::size_t trials = 1000;
    std::uint64_t base_seed = 20250101;
    std::vector<std::string> mechanisms = all_mechanisms();
    std::size_t threads = 0;  ///< 0 = hardware concurrency

    void validate() const {
        if (trials == 0) throw std::invalid_argument("trials must be at least 1");
        if (agents == 0) throw std::invalid_argument("agents must be at least 1");
        if (scenario == ScenarioKind::random && choices == 0) {
            throw std::invalid_argument("choices must be at least 1");
        }
        if (scenario == ScenarioKind::waypoint && agents > max_waypoint_agents) {
            throw std::invalid_argument("waypoint scenario: n! options exceed the cap");
        }
        if (!(sampling.separation > 0.0) || !(sampling.urgency_min > 0.0) ||
            sampling.urgency_max < sampling.urgency_min || !(sampling.valuation_min > 0.0) ||
            sampling.valuation_max < sampling.valuation_min || sampling.eta_span_per_agent < 0.0) {
            throw std::invalid_argument("invalid waypoint sampling ranges");
        }
        if (epsilon_relative < 0.0) throw std::invalid_argument("epsilon_relative must be >= 0");
        if (mechanisms.empty()) throw std::invalid_argument("no mechanisms selected");
        for (const auto& m : mechanisms) {
            if (std::find(all_mechanisms().begin(), all_mechanisms().end(), m) ==
                all_mechanisms().end()) {
                throw std::invalid_argument("unknown mechanism '" + m + "'");
            }
        }
        TacoConfig probe;
        probe.d0 = d0;
        probe.gamma = gamma;
        probe.epsilon = epsilon;
        probe.max_steps = max_steps;
        probe.validate(agents);
    }
};

enum class TrialStatus { ok, step_cap, history_cap };

inline std::string to_string(TrialStatus s) {
    switch (s) {
        case TrialStatus::ok: return "ok";
        case TrialStatus::step_cap: return "step_cap";
        case TrialStatus::history_cap: return "history_cap";
    }
    return "?";
}

struct TrialRow {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t m = 0;
    std::string gamma;
    double epsilon = 0.0;
    std::string d0;
    TrialStatus status = TrialStatus::ok;
    TrialResult result;
};

inline ChoiceProblem make_problem(const ExperimentConfig& cfg, Rng& rng) {
    switch (cfg.scenario) {
        case ScenarioKind::waypoint:
            return sample_waypoint_problem(cfg.agents, rng, cfg.sampling, cfg.max_waypoint_agents);
        case ScenarioKind::random: return random_problem(cfg.agents, cfg.choices, rng);
        case ScenarioKind::example2: return example2_fixture();
    }
    throw std::logic_error("make_problem: unreachable");
}

/// All mechanisms of one trial, on one shared instance.
inline std::vector<TrialRow> run_trial(const ExperimentConfig& cfg, std::size_t trial) {
    const std::uint64_t seed = trial_seed(cfg.base_seed, trial);
    Rng instance_rng(seed);
    const ChoiceProblem problem = make_problem(cfg, instance_rng);
    Rng mechanism_rng(splitmix64(seed ^ 0x6d656368616e6973ULL));

    double epsilon = cfg.epsilon;
    if (cfg.epsilon_relative > 0.0) {
        const auto& c = problem.cost.data();
        epsilon = cfg.epsilon_relative * std::accumulate(c.begin(), c.end(), 0.0) /
                  static_cast<double>(c.size());
        if (!(epsilon > 0.0)) epsilon = cfg.epsilon;
    }

    std::vector<TrialRow> rows;
    for (const auto& mech : cfg.mechanisms) {
        TrialRow row;
        row.trial = trial;
        row.seed = seed;
        row.n = problem.agents();
        row.m = problem.choices();
        row.gamma = cfg.gamma.str();
        row.epsilon = epsilon;
        row.d0 = cfg.d0.str();

        if (mech == "taco") {
            TacoConfig tc;
            tc.d0 = cfg.d0;
            tc.gamma = cfg.gamma;
            tc.epsilon = epsilon;
            tc.max_steps = cfg.max_steps;
            tc.record_trace = false;
            const auto agents = problem.make_agents();
            try {
                const TacoOutcome out = cfg.interrupt_step > 0
                                            ? run_interrupted(tc, agents, cfg.interrupt_step)
                                            : run_taco(tc, agents);
                row.result = evaluate_choice(mech, problem, out.consensus_choice, out.settlements);
                row.result.steps = out.steps;
                row.result.rounds = out.rounds;
                row.result.cycles_detected = out.cycles_detected;
                row.result.max_cycle_spread_ratio = max_cycle_spread_ratio(out, problem.valuations);
            } catch (const NoTerminationError& e) {
                row.status = TrialStatus::step_cap;
                row.result.mechanism = mech;
                row.result.steps = e.partial().steps;
                row.result.rounds = e.partial().rounds;
                row.result.cycles_detected = e.partial().cycles.size();
                row.result.max_cycle_spread_ratio =
                    max_cycle_spread_ratio(e.partial(), problem.valuations);
            } catch (const HistoryCapacityError&) {
                row.status = TrialStatus::history_cap;
                row.result.mechanism = mech;
            }
        } else {
            std::size_t chosen = 0;
            if (mech == "voting") chosen = voting(problem, mechanism_rng);
            else if (mech == "random_dictator") chosen = random_dictator(problem, mechanism_rng);
            else if (mech == "utilitarian") chosen = utilitarian(problem);
            else chosen = egalitarian(problem);
            row.result = evaluate_choice(mech, problem, chosen, {});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Runs every trial; rows come back ordered by trial then mechanism regardless of thread count.
inline std::vector<TrialRow> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<std::vector<TrialRow>> per_trial(cfg.trials);
    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, cfg.trials);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= cfg.trials || failed.load()) return;
            try {
                per_trial[t] = run_trial(cfg, t);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<TrialRow> rows;
    for (auto& v : per_trial) {
        for (auto& r : v) rows.push_back(std::move(r));
    }
    return rows;
}

// --- CSV -------------------------------------------------------------------

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::size_t max_agents(const std::vector<TrialRow>& rows) {
    std::size_t n = 0;
    for (const auto& r : rows) n = std::max(n, r.n);
    return n;
}

/// Header row. `prefix` names extra leading columns (for sweep and interruption files).
inline void write_csv_header(std::ostream& os, std::size_t agent_columns,
                             const std::vector<std::string>& prefix = {}) {
    for (const auto& p : prefix) os << p << ',';
    os << "trial,seed,mechanism,n,m,gamma,epsilon,d0,chosen_option,steps,rounds,cycles,status,"
          "og_raw,og_settled,gini_raw,gini_settled,max_cycle_spread_ratio";
    for (std::size_t i = 1; i <= agent_columns; ++i) os << ",raw_cost_" << i;
    for (std::size_t i = 1; i <= agent_columns; ++i) os << ",settled_cost_" << i;
    os << '\n';
}

/// One data row; chosen_option is 1-based. Fields of failed trials are left empty.
inline void write_csv_row(std::ostream& os, const TrialRow& row, std::size_t agent_columns,
                          const std::vector<std::string>& prefix = {}) {
    const auto& r = row.result;
    const bool ok = row.status == TrialStatus::ok;
    for (const auto& p : prefix) os << p << ',';
    os << row.trial << ',' << row.seed << ',' << r.mechanism << ',' << row.n << ',' << row.m << ','
       << row.gamma << ',' << format_double(row.epsilon) << ',' << row.d0 << ',';
    if (ok) os << (r.chosen_option + 1);
    os << ',' << r.steps << ',' << r.rounds << ',' << r.cycles_detected << ',' << to_string(row.status)
       << ',';
    if (ok) {
        os << format_double(r.og_raw) << ',' << format_double(r.og_settled) << ','
           << format_double(r.gini_raw) << ',' << format_double(r.gini_settled);
    } else {
        os << ",,,";
    }
    os << ',' << format_double(r.max_cycle_spread_ratio);
    for (std::size_t i = 0; i < agent_columns; ++i) {
        os << ',';
        if (ok && i < r.raw_costs.size()) os << format_double(r.raw_costs[i]);
    }
    for (std::size_t i = 0; i < agent_columns; ++i) {
        os << ',';
        if (ok && i < r.settled_costs.size()) os << format_double(r.settled_costs[i]);
    }
    os << '\n';
}

inline void write_csv(std::ostream& os, const std::vector<TrialRow>& rows) {
    const auto cols = max_agents(rows);
    write_csv_header(os, cols);
    for (const auto& r : rows) write_csv_row(os, r, cols);
}

// --- Summaries ---------------------------------------------------------------

/// Order statistics over the finite values of one metric.
struct Stats {
    std::size_t count = 0;
    std::size_t undefined = 0;  ///< NaN values (undefined metric) left out
    double median = std::numeric_limits<double>::quiet_NaN();
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();  ///< sample standard deviation
};

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline Stats compute_stats(std::vector<double> values) {
    Stats s;
    std::vector<double> finite;
    finite.reserve(values.size());
    for (double v : values) {
        if (std::isnan(v)) ++s.undefined;
        else finite.push_back(v);
    }
    std::sort(finite.begin(), finite.end());
    s.count = finite.size();
    if (finite.empty()) return s;
    s.median = quantile_sorted(finite, 0.5);
    s.q1 = quantile_sorted(finite, 0.25);
    s.q3 = quantile_sorted(finite, 0.75);
    s.min = finite.front();
    s.max = finite.back();
    s.mean = std::accumulate(finite.begin(), finite.end(), 0.0) / static_cast<double>(finite.size());
    if (finite.size() > 1) {
        double ss = 0.0;
        for (double v : finite) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(finite.size() - 1));
    }
    return s;
}

inline const std::vector<std::string>& summary_metrics() {
    static const std::vector<std::string> names = {
        "steps",    "rounds",      "cycles",       "og_raw", "og_settled",
        "gini_raw", "gini_settled", "max_cycle_spread_ratio"};
    return names;
}

inline double metric_value(const TrialResult& r, const std::string& metric) {
    if (metric == "steps") return static_cast<double>(r.steps);
    if (metric == "rounds") return static_cast<double>(r.rounds);
    if (metric == "cycles") return static_cast<double>(r.cycles_detected);
    if (metric == "og_raw") return r.og_raw;
    if (metric == "og_settled") return r.og_settled;
    if (metric == "gini_raw") return r.gini_raw;
    if (metric == "gini_settled") return r.gini_settled;
    if (metric == "max_cycle_spread_ratio") return r.max_cycle_spread_ratio;
    throw std::invalid_argument("unknown metric '" + metric + "'");
}

struct MechanismSummary {
    std::size_t trials = 0;
    std::size_t failed = 0;
    std::map<std::string, Stats> metrics;
};

/// Per-mechanism statistics; failed trials are counted but excluded.
inline std::map<std::string, MechanismSummary> summarize(const std::vector<TrialRow>& rows) {
    std::map<std::string, std::map<std::string, std::vector<double>>> values;
    std::map<std::string, MechanismSummary> out;
    for (const auto& row : rows) {
        auto& ms = out[row.result.mechanism];
        ++ms.trials;
        if (row.status != TrialStatus::ok) {
            ++ms.failed;
            continue;
        }
        for (const auto& metric : summary_metrics()) {
            values[row.result.mechanism][metric].push_back(metric_value(row.result, metric));
        }
    }
    for (auto& [mech, per_metric] : values) {
        for (auto& [metric, v] : per_metric) out[mech].metrics[metric] = compute_stats(std::move(v));
    }
    return out;
}

inline nlohmann::ordered_json stats_json(const Stats& s) {
    auto num = [](double v) -> nlohmann::ordered_json {
        if (!std::isfinite(v)) return nullptr;
        return v;
    };
    return {{"count", s.count}, {"undefined", s.undefined}, {"median", num(s.median)},
            {"q1", num(s.q1)},  {"q3", num(s.q3)},         {"min", num(s.min)},
            {"max", num(s.max)}, {"mean", num(s.mean)},     {"stddev", num(s.stddev)}};
}

inline nlohmann::ordered_json summary_json(const std::map<std::string, MechanismSummary>& summary) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [mech, ms] : summary) {
        nlohmann::ordered_json m;
        m["trials"] = ms.trials;
        m["failed"] = ms.failed;
        for (const auto& [metric, st] : ms.metrics) m["metrics"][metric] = stats_json(st);
        j[mech] = std::move(m);
    }
    return j;
}

inline nlohmann::ordered_json config_json(const ExperimentConfig& c) {
    return {{"scenario", to_string(c.scenario)},
            {"agents", c.agents},
            {"choices", c.choices},
            {"separation", c.sampling.separation},
            {"eta_span_per_agent", c.sampling.eta_span_per_agent},
            {"urgency", {c.sampling.urgency_min, c.sampling.urgency_max}},
            {"valuation", {c.sampling.valuation_min, c.sampling.valuation_max}},
            {"d0", c.d0.str()},
            {"gamma", c.gamma.str()},
            {"epsilon", c.epsilon},
            {"epsilon_relative", c.epsilon_relative},
            {"max_steps", c.max_steps},
            {"interrupt_step", c.interrupt_step},
            {"trials", c.trials},
            {"base_seed", c.base_seed},
            {"mechanisms", c.mechanisms}};
}

inline bool any_failed(const std::vector<TrialRow>& rows) {
    return std::any_of(rows.begin(), rows.end(),
                       [](const TrialRow& r) { return r.status != TrialStatus::ok; });
}

}  // namespace taco
