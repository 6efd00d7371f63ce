#include "taco/experiment.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace {

taco::ExperimentConfig small_config() {
    taco::ExperimentConfig c;
    c.trials = 40;
    c.base_seed = 99;
    return c;
}

std::string csv_of(const taco::ExperimentConfig& c) {
    std::ostringstream os;
    taco::write_csv(os, taco::run_experiment(c));
    return os.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

TEST(Seeds, MixingRule) {
    EXPECT_EQ(taco::trial_seed(1, 0), taco::splitmix64(1 ^ taco::splitmix64(0)));
    EXPECT_NE(taco::trial_seed(1, 0), taco::trial_seed(1, 1));
    EXPECT_NE(taco::trial_seed(1, 0), taco::trial_seed(2, 0));
}

TEST(Experiment, ByteIdenticalAcrossRunsAndThreadCounts) {
    auto c = small_config();
    c.threads = 1;
    const auto one = csv_of(c);
    EXPECT_EQ(one, csv_of(c));
    c.threads = 4;
    EXPECT_EQ(one, csv_of(c));
}

TEST(Experiment, SingleTrialSingleRow) {
    auto c = small_config();
    c.trials = 1;
    c.mechanisms = {"taco"};
    const auto rows = parse_csv(csv_of(c));
    ASSERT_EQ(rows.size(), 2u);
    const std::vector<std::string> head = {"trial", "seed", "mechanism", "n", "m", "gamma",
                                           "epsilon", "d0", "chosen_option", "steps", "rounds",
                                           "cycles", "status"};
    for (std::size_t k = 0; k < head.size(); ++k) EXPECT_EQ(rows[0][k], head[k]);
    EXPECT_EQ(rows[0].back(), "settled_cost_4");
    EXPECT_EQ(rows[1].size(), rows[0].size());
    EXPECT_EQ(rows[1][2], "taco");
    EXPECT_EQ(rows[1][5], "9/10");
    EXPECT_EQ(rows[1][12], "ok");
}

TEST(Experiment, MechanismsShareInstancesAndGammaPairs) {
    auto c = small_config();
    const auto a = taco::run_experiment(c);
    c.gamma = taco::ExactAmount(3, 10);
    const auto b = taco::run_experiment(c);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        ASSERT_EQ(a[k].seed, b[k].seed);
        if (a[k].result.mechanism == "utilitarian") {
            ASSERT_EQ(a[k].result.raw_costs, b[k].result.raw_costs);
        }
    }
    // Within a trial every mechanism sees one instance: the utilitarian total is the least.
    for (std::size_t k = 0; k < a.size(); k += c.mechanisms.size()) {
        double best = 1e300;
        for (std::size_t q = 0; q < c.mechanisms.size(); ++q) {
            const auto& r = a[k + q].result.raw_costs;
            best = std::min(best, std::accumulate(r.begin(), r.end(), 0.0));
        }
        const auto& u = a[k + 3].result;
        ASSERT_EQ(u.mechanism, "utilitarian");
        ASSERT_DOUBLE_EQ(std::accumulate(u.raw_costs.begin(), u.raw_costs.end(), 0.0), best);
    }
}

TEST(Experiment, StepCapIsRecordedNotDropped) {
    auto c = small_config();
    c.max_steps = 4;
    c.mechanisms = {"taco", "voting"};
    const auto rows = taco::run_experiment(c);
    ASSERT_EQ(rows.size(), 2 * c.trials);
    EXPECT_TRUE(taco::any_failed(rows));
    const auto s = taco::summarize(rows);
    EXPECT_EQ(s.at("taco").trials, c.trials);
    EXPECT_GT(s.at("taco").failed, 0u);
    EXPECT_EQ(s.at("voting").failed, 0u);
    std::ostringstream os;
    taco::write_csv(os, rows);
    EXPECT_NE(os.str().find("step_cap"), std::string::npos);
}

TEST(Experiment, Validation) {
    auto c = small_config();
    c.trials = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config();
    c.mechanisms = {"dictatorship"};
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config();
    c.agents = 8;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config();
    c.gamma = taco::ExactAmount(1);
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_THROW(taco::parse_scenario_kind("grid"), std::invalid_argument);
}

TEST(Stats, TypeSevenQuantiles) {
    const auto s = taco::compute_stats({4, 1, 3, 2, std::numeric_limits<double>::quiet_NaN()});
    EXPECT_EQ(s.count, 4u);
    EXPECT_EQ(s.undefined, 1u);
    EXPECT_DOUBLE_EQ(s.median, 2.5);
    EXPECT_DOUBLE_EQ(s.q1, 1.75);
    EXPECT_DOUBLE_EQ(s.q3, 3.25);
    EXPECT_DOUBLE_EQ(s.max, 4);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-15);
    const auto one = taco::compute_stats({7});
    EXPECT_DOUBLE_EQ(one.median, 7);
    EXPECT_TRUE(std::isnan(one.stddev));
    EXPECT_EQ(taco::compute_stats({}).count, 0u);
}

// The summary can be rebuilt from the CSV alone.
TEST(Experiment, SummaryDerivableFromCsv) {
    const auto c = small_config();
    const auto rows = taco::run_experiment(c);
    std::ostringstream os;
    taco::write_csv(os, rows);
    const auto table = parse_csv(os.str());
    const auto& head = table[0];
    auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(head.begin(), head.end(), name) - head.begin());
    };
    const auto summary = taco::summarize(rows);
    for (const auto& mech : c.mechanisms) {
        for (const std::string metric : {"steps", "og_raw", "gini_settled"}) {
            std::vector<double> v;
            for (std::size_t r = 1; r < table.size(); ++r) {
                if (table[r][col("mechanism")] != mech || table[r][col("status")] != "ok") continue;
                v.push_back(std::stod(table[r][col(metric)]));
            }
            const auto s = taco::compute_stats(v);
            const auto& ref = summary.at(mech).metrics.at(metric);
            ASSERT_EQ(s.count, ref.count);
            ASSERT_EQ(s.median, ref.median);
            ASSERT_EQ(s.q1, ref.q1);
            ASSERT_EQ(s.q3, ref.q3);
        }
    }
}

TEST(Experiment, InterruptedRunsStopEarly) {
    auto c = small_config();
    c.mechanisms = {"taco"};
    c.interrupt_step = 5;
    for (const auto& r : taco::run_experiment(c)) {
        ASSERT_LE(r.result.steps, 5u);
        ASSERT_EQ(r.status, taco::TrialStatus::ok);
    }
}

TEST(Experiment, RandomAndExampleScenarios) {
    auto c = small_config();
    c.scenario = taco::ScenarioKind::random;
    c.agents = 3;
    c.choices = 7;
    for (const auto& r : taco::run_experiment(c)) {
        ASSERT_EQ(r.n, 3u);
        ASSERT_EQ(r.m, 7u);
    }
    c.scenario = taco::ScenarioKind::example2;
    c.mechanisms = {"taco"};
    c.trials = 2;
    for (const auto& r : taco::run_experiment(c)) ASSERT_EQ(r.result.steps, 5u);
}
