// taco: command-line driver for single runs, Monte Carlo comparisons and sweeps.

#include "taco/experiment.hpp"
#include "taco/metrics.hpp"
#include "taco/replay.hpp"
#include "taco/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitStepCap = 2;

struct Options {
    std::string scenario = "waypoint";
    std::size_t agents = 4;
    std::size_t choices = 24;
    taco::WaypointSampling sampling;
    std::string d0 = "1";
    std::string gamma = "9/10";
    double epsilon = 0.1;
    double epsilon_relative = 0.0;
    std::size_t max_steps = 1'000'000;
    std::size_t trials = 1000;
    std::uint64_t seed = 20250101;
    std::vector<std::string> mechanisms = taco::all_mechanisms();
    std::size_t threads = 0;
    std::string out_dir;
};

taco::ExperimentConfig to_config(const Options& o) {
    taco::ExperimentConfig c;
    c.scenario = taco::parse_scenario_kind(o.scenario);
    c.agents = o.agents;
    c.choices = o.choices;
    c.sampling = o.sampling;
    c.d0 = taco::ExactAmount::parse(o.d0);
    c.gamma = taco::ExactAmount::parse(o.gamma);
    c.epsilon = o.epsilon;
    c.epsilon_relative = o.epsilon_relative;
    c.max_steps = o.max_steps;
    c.trials = o.trials;
    c.base_seed = o.seed;
    c.mechanisms = o.mechanisms;
    c.threads = o.threads;
    if (c.scenario == taco::ScenarioKind::example2) {
        c.agents = 2;
        c.choices = 2;
    }
    return c;
}

/// CSV goes to <out>/<name>.csv, or stdout when no directory was given.
class Sink {
public:
    Sink(const std::string& dir, const std::string& name) {
        if (dir.empty()) return;
        std::filesystem::create_directories(dir);
        path_ = std::filesystem::path(dir) / (name + ".csv");
        summary_path_ = std::filesystem::path(dir) / (name + "_summary.json");
        file_.open(path_);
        if (!file_) throw std::runtime_error("cannot open " + path_.string());
    }

    std::ostream& csv() { return path_.empty() ? std::cout : file_; }

    /// Summary goes next to the CSV, or to stderr.
    void summary(const nlohmann::ordered_json& j) {
        if (summary_path_.empty()) {
            std::cerr << j.dump(2) << '\n';
            return;
        }
        std::ofstream s(summary_path_);
        s << j.dump(2) << '\n';
        std::cerr << "wrote " << path_.string() << " and " << summary_path_.string() << '\n';
    }

private:
    std::filesystem::path path_;
    std::filesystem::path summary_path_;
    std::ofstream file_;
};

std::string fmt_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

template <class M, class F>
std::string fmt_matrix(const M& mat, F&& cell) {
    std::string s = "[";
    for (std::size_t i = 0; i < mat.rows(); ++i) {
        if (i) s += "; ";
        for (std::size_t j = 0; j < mat.cols(); ++j) {
            if (j) s += ' ';
            s += cell(mat(i, j));
        }
    }
    return s + "]";
}

std::string fmt_selections(const std::vector<std::optional<std::size_t>>& sel) {
    std::string s = "(";
    for (std::size_t i = 0; i < sel.size(); ++i) {
        if (i) s += ',';
        s += sel[i] ? std::to_string(*sel[i] + 1) : "-";
    }
    return s + ")";
}

nlohmann::ordered_json exact_matrix_json(const taco::Matrix<taco::ExactAmount>& mat) {
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < mat.rows(); ++i) {
        auto r = nlohmann::ordered_json::array();
        for (std::size_t j = 0; j < mat.cols(); ++j) r.push_back(mat(i, j).str());
        rows.push_back(std::move(r));
    }
    return rows;
}

int cmd_example(const Options& o, const std::string& trace_path) {
    const auto problem = taco::example2_fixture();
    taco::TacoConfig tc;
    tc.d0 = taco::ExactAmount::parse(o.d0);
    tc.gamma = taco::ExactAmount::parse(o.gamma);
    tc.epsilon = o.epsilon;
    tc.max_steps = o.max_steps;
    tc.validate(problem.agents());
    const auto outcome = taco::run_taco(tc, problem.make_agents());
    const auto rows = taco::tabulate_run(problem, tc, outcome);

    std::cout << "step,agent,O,P,J,selections\n";
    for (const auto& r : rows) {
        std::cout << r.step << ',' << (r.agent + 1) << ','
                  << fmt_matrix(r.offers, [](const auto& v) { return v.str(); }) << ','
                  << fmt_matrix(r.payments, [](const auto& v) { return v.str(); }) << ','
                  << fmt_matrix(r.profits, [](double v) { return fmt_real(v); }) << ','
                  << fmt_selections(r.selections) << '\n';
    }
    std::cout << "cycles detected at steps:";
    for (const auto& c : outcome.cycles) std::cout << ' ' << c.end_step;
    std::cout << "\nterminated at step " << outcome.steps
              << (outcome.terminated_naturally ? "" : " (not natural)") << "\nconsensus choice "
              << (outcome.consensus_choice + 1) << "\nsettlements pi = O - P:";
    for (const auto& s : outcome.settlements) std::cout << ' ' << s.str();
    std::cout << '\n';

    if (!trace_path.empty()) {
        nlohmann::ordered_json j;
        j["steps"] = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            nlohmann::ordered_json s;
            s["step"] = r.step;
            s["agent"] = r.agent + 1;
            s["O"] = exact_matrix_json(r.offers);
            s["P"] = exact_matrix_json(r.payments);
            auto jm = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < r.profits.rows(); ++i) {
                auto row = nlohmann::ordered_json::array();
                for (double v : r.profits.row(i)) row.push_back(v);
                jm.push_back(std::move(row));
            }
            s["J"] = std::move(jm);
            auto sel = nlohmann::ordered_json::array();
            for (const auto& x : r.selections) {
                if (x) sel.push_back(*x + 1);
                else sel.push_back(nullptr);
            }
            s["selections"] = std::move(sel);
            j["steps"].push_back(std::move(s));
        }
        auto cyc = nlohmann::ordered_json::array();
        for (const auto& c : outcome.cycles) {
            auto active = nlohmann::ordered_json::array();
            for (auto a : c.active_choices) active.push_back(a + 1);
            cyc.push_back({{"start_step", c.start_step},
                           {"end_step", c.end_step},
                           {"active_choices", active},
                           {"d", c.d_at_detection.str()}});
        }
        j["cycles"] = std::move(cyc);
        j["terminated_at"] = outcome.steps;
        j["consensus_choice"] = outcome.consensus_choice + 1;
        auto pi = nlohmann::ordered_json::array();
        for (const auto& s : outcome.settlements) pi.push_back(s.str());
        j["settlements"] = std::move(pi);
        j["final_d"] = outcome.final_d.str();
        std::ofstream f(trace_path);
        if (!f) throw std::runtime_error("cannot open " + trace_path);
        f << j.dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_montecarlo(const Options& o) {
    const auto cfg = to_config(o);
    const auto rows = taco::run_experiment(cfg);
    Sink sink(o.out_dir, "montecarlo");
    taco::write_csv(sink.csv(), rows);
    nlohmann::ordered_json j;
    j["schema_version"] = taco::kCsvSchemaVersion;
    j["config"] = taco::config_json(cfg);
    j["mechanisms"] = taco::summary_json(taco::summarize(rows));
    sink.summary(j);
    return taco::any_failed(rows) ? kExitStepCap : kExitOk;
}

int cmd_sweep_gamma(const Options& o, const std::vector<std::string>& gammas) {
    auto cfg = to_config(o);
    Sink sink(o.out_dir, "sweep_gamma");
    nlohmann::ordered_json j;
    j["schema_version"] = taco::kCsvSchemaVersion;
    j["config"] = taco::config_json(cfg);
    bool failed = false;
    std::vector<std::vector<taco::TrialRow>> all;
    for (const auto& g : gammas) {
        cfg.gamma = taco::ExactAmount::parse(g);
        cfg.validate();
    }
    std::size_t cols = 0;
    for (const auto& g : gammas) {
        cfg.gamma = taco::ExactAmount::parse(g);
        all.push_back(taco::run_experiment(cfg));
        cols = std::max(cols, taco::max_agents(all.back()));
    }
    taco::write_csv_header(sink.csv(), cols);
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        for (const auto& r : all[k]) taco::write_csv_row(sink.csv(), r, cols);
        failed = failed || taco::any_failed(all[k]);
        j["gamma"][taco::ExactAmount::parse(gammas[k]).str()] =
            taco::summary_json(taco::summarize(all[k]));
    }
    sink.summary(j);
    return failed ? kExitStepCap : kExitOk;
}

int cmd_interrupt(const Options& o, std::vector<std::string> steps) {
    auto cfg = to_config(o);
    if (steps.empty()) steps = {"natural", "50", "20", std::to_string(cfg.agents + 1)};
    std::vector<std::size_t> points;
    for (const auto& s : steps) {
        if (s == "natural") {
            points.push_back(0);
            continue;
        }
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != s.size() || v == 0) {
            throw std::invalid_argument("interrupt step '" + s + "' must be 'natural' or positive");
        }
        points.push_back(static_cast<std::size_t>(v));
    }
    cfg.validate();
    Sink sink(o.out_dir, "interrupt");
    nlohmann::ordered_json j;
    j["schema_version"] = taco::kCsvSchemaVersion;
    j["config"] = taco::config_json(cfg);
    std::vector<std::vector<taco::TrialRow>> all;
    std::size_t cols = 0;
    for (auto p : points) {
        cfg.interrupt_step = p;
        all.push_back(taco::run_experiment(cfg));
        cols = std::max(cols, taco::max_agents(all.back()));
    }
    bool failed = false;
    taco::write_csv_header(sink.csv(), cols, {"interrupt_step"});
    for (std::size_t k = 0; k < points.size(); ++k) {
        const std::string label = points[k] ? std::to_string(points[k]) : "natural";
        for (const auto& r : all[k]) taco::write_csv_row(sink.csv(), r, cols, {label});
        failed = failed || taco::any_failed(all[k]);
        j["interrupt_step"][label] = taco::summary_json(taco::summarize(all[k]));
    }
    sink.summary(j);
    return failed ? kExitStepCap : kExitOk;
}

int cmd_scalability(const Options& o, const std::vector<std::size_t>& ns,
                    const std::vector<std::size_t>& ms) {
    auto cfg = to_config(o);
    cfg.scenario = taco::ScenarioKind::random;
    cfg.mechanisms = {"taco"};
    Sink sink(o.out_dir, "scalability");
    auto& os = sink.csv();
    os << "n,m,trials,failed,mean_rounds,std_rounds,mean_steps,std_steps\n";
    bool failed = false;
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (auto n : ns) {
        for (auto m : ms) {
            cfg.agents = n;
            cfg.choices = m;
            const auto rows = taco::run_experiment(cfg);
            const auto summary = taco::summarize(rows).at("taco");
            const auto& rounds = summary.metrics.at("rounds");
            const auto& st = summary.metrics.at("steps");
            os << n << ',' << m << ',' << summary.trials << ',' << summary.failed << ','
               << taco::format_double(rounds.mean) << ',' << taco::format_double(rounds.stddev)
               << ',' << taco::format_double(st.mean) << ',' << taco::format_double(st.stddev)
               << '\n';
            failed = failed || summary.failed > 0;
            j.push_back({{"n", n}, {"m", m}, {"taco", taco::summary_json({{"taco", summary}})["taco"]}});
        }
    }
    nlohmann::ordered_json out;
    out["config"] = taco::config_json(cfg);
    out["cells"] = std::move(j);
    sink.summary(out);
    return failed ? kExitStepCap : kExitOk;
}

int cmd_bound(const Options& o, double b_max) {
    const auto b = taco::termination_bound(o.agents, o.choices, taco::ExactAmount::parse(o.gamma),
                                           o.epsilon, taco::ExactAmount::parse(o.d0), b_max);
    std::cout << "cycles " << b.cycles << '\n'
              << "steps_per_cycle " << b.steps_per_cycle << '\n'
              << "total " << b.total << '\n'
              << "log_steps_per_cycle " << taco::format_double(b.log_steps_per_cycle) << '\n'
              << "log_total " << taco::format_double(b.log_total) << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trading auction consensus simulator"};
    app.set_config("--config", "", "key = value configuration file");
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--scenario", o.scenario, "waypoint, random or example2")
        ->check(CLI::IsMember({"waypoint", "random", "example2"}))
        ->capture_default_str();
    app.add_option("-n,--agents", o.agents, "number of agents")->capture_default_str();
    app.add_option("-m,--choices", o.choices, "number of choices (random scenario)")
        ->capture_default_str();
    app.add_option("--separation", o.sampling.separation, "waypoint separation D")
        ->capture_default_str();
    app.add_option("--eta-span", o.sampling.eta_span_per_agent,
                   "ETAs are uniform on [0, eta_span * n * D)")
        ->capture_default_str();
    app.add_option("--urgency-min", o.sampling.urgency_min)->capture_default_str();
    app.add_option("--urgency-max", o.sampling.urgency_max)->capture_default_str();
    app.add_option("--valuation-min", o.sampling.valuation_min)->capture_default_str();
    app.add_option("--valuation-max", o.sampling.valuation_max)->capture_default_str();
    app.add_option("--d0", o.d0, "initial trading unit (rational, e.g. 1 or 1/2)")
        ->capture_default_str();
    app.add_option("--gamma", o.gamma, "trading unit decay, rational in (0,1)")
        ->capture_default_str();
    app.add_option("--epsilon", o.epsilon, "absolute termination tolerance")->capture_default_str();
    app.add_option("--epsilon-relative", o.epsilon_relative,
                   "if > 0, epsilon = value * mean(C) per trial")
        ->capture_default_str();
    app.add_option("--max-steps", o.max_steps, "step cap per run")->capture_default_str();
    app.add_option("--trials", o.trials, "Monte Carlo trials")->capture_default_str();
    app.add_option("--seed", o.seed, "base seed")->capture_default_str();
    app.add_option("--mechanisms", o.mechanisms, "mechanisms to run")
        ->check(CLI::IsMember(taco::all_mechanisms()))
        ->capture_default_str();
    app.add_option("--threads", o.threads, "worker threads, 0 = all cores")->capture_default_str();
    app.add_option("-o,--out-dir", o.out_dir, "write CSV and summary here instead of stdout/stderr");

    auto* example = app.add_subcommand("example", "replay the two-agent running example");
    std::string trace_path;
    example->add_option("--trace", trace_path, "write the step trace as JSON");

    app.add_subcommand("montecarlo", "compare all mechanisms over random instances");

    auto* sweep = app.add_subcommand("sweep-gamma", "Monte Carlo for several gamma values");
    std::vector<std::string> gammas = {"3/10", "6/10", "9/10", "99/100"};
    sweep->add_option("--gammas", gammas, "gamma values")->capture_default_str();

    auto* interrupt = app.add_subcommand("interrupt", "stop runs early and compare outcomes");
    std::vector<std::string> steps;
    interrupt->add_option("--steps", steps, "interruption steps ('natural' or a count); default natural 50 20 n+1");

    auto* scal = app.add_subcommand("scalability", "mean rounds over an (n, m) grid");
    std::vector<std::size_t> ns = {3, 5, 7, 10};
    std::vector<std::size_t> ms = {3, 10, 30, 100};
    scal->add_option("--ns", ns, "agent counts")->capture_default_str();
    scal->add_option("--ms", ms, "choice counts")->capture_default_str();

    auto* bound = app.add_subcommand("bound", "worst-case steps within cycles");
    double b_max = 1.0;
    bound->add_option("--b-max", b_max, "largest valuation")->capture_default_str();

    auto* show = app.add_subcommand("show-config", "print every setting with its default");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*show) {
            std::cout << app.config_to_str(true, true);
            return kExitOk;
        }
        if (*example) return cmd_example(o, trace_path);
        if (*bound) return cmd_bound(o, b_max);
        if (*sweep) return cmd_sweep_gamma(o, gammas);
        if (*interrupt) {
            if (std::find(o.mechanisms.begin(), o.mechanisms.end(), "taco") == o.mechanisms.end()) {
                throw std::invalid_argument("interrupt requires the taco mechanism");
            }
            return cmd_interrupt(o, steps);
        }
        if (*scal) {
            if (app.get_option("--trials")->count() == 0) o.trials = 100;
            return cmd_scalability(o, ns, ms);
        }
        return cmd_montecarlo(o);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const taco::ResourceLimitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}
