// meshpredict: validate configs, trace delivery predictions, run closed-loop Monte Carlo.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "meshpredict/meshpredict.hpp"

namespace fs = std::filesystem;
using namespace meshpredict;

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IOError, "cannot create " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_predictions(const ScenarioConfig& sc, int horizon, const std::string& out) {
    const auto rows = run_estimator_trace(sc, horizon);
    detail::write_file(join(out, "predictions.csv"), predictions_to_csv(rows));
    detail::write_file(join(out, "predictions.json"), predictions_to_json(rows).dump(2) + "\n");
}

void write_trace(const ScenarioConfig& sc, ControllerKind kind, const std::string& path) {
    const auto prepared = prepare_controller(sc, kind);
    std::vector<std::pair<std::uint64_t, RunResult>> runs;
    for (int r = 0; r < sc.runs; ++r)
        runs.emplace_back(static_cast<std::uint64_t>(r), run_closed_loop(sc, prepared, static_cast<std::uint64_t>(r)));
    detail::write_file(path, trace_to_csv(runs, sc.plant.input_dim(), sc.plant.state_dim()));
}

void write_reports(const AggregateReport& report, const std::string& out) {
    emit_report(report, ReportFormat::Csv, join(out, "report.csv"));
    emit_report(report, ReportFormat::Json, join(out, "report.json"));
}

void print_summary(const AggregateReport& report) {
    for (const auto& c : report.controllers)
        std::cout << c.name << ": mean cost " << c.mean_cost << " +/- " << c.std_error << " (" << c.runs << " runs)\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Network estimation, packet delivery prediction and FPD control over TDMA mesh networks"};
    app.require_subcommand(1);

    std::string config;
    std::string out = "out";
    int horizon = 0;
    int runs = 0;
    std::uint64_t seed = 0;
    std::string controller = "fpd";
    bool trace = false;
    unsigned threads = 0;

    auto* validate_cmd = app.add_subcommand("validate", "Check a config file");
    validate_cmd->add_option("config", config, "Config JSON")->required();

    auto* predict_cmd = app.add_subcommand("predict", "Delivery predictions along the scripted network");
    predict_cmd->add_option("config", config, "Config JSON")->required();
    predict_cmd->add_option("--horizon", horizon, "Prediction horizon H")->required();
    predict_cmd->add_option("--out", out, "Output directory");

    auto* simulate_cmd = app.add_subcommand("simulate", "Monte-Carlo runs of one controller");
    simulate_cmd->add_option("config", config, "Config JSON")->required();
    simulate_cmd->add_option("--controller", controller, "fpd | iid | on")->check(CLI::IsMember({"fpd", "iid", "on"}));
    simulate_cmd->add_option("--runs", runs, "Number of runs (overrides config)");
    simulate_cmd->add_option("--seed", seed, "Master seed (overrides config)");
    simulate_cmd->add_option("--out", out, "Output directory");
    simulate_cmd->add_option("--threads", threads, "Worker threads (0 = hardware)");
    simulate_cmd->add_flag("--trace", trace, "Write per-run trajectories");

    auto* compare_cmd = app.add_subcommand("compare", "Monte-Carlo comparison of FPD, IID and ON controllers");
    compare_cmd->add_option("config", config, "Config JSON")->required();
    compare_cmd->add_option("--runs", runs, "Number of runs (overrides config)");
    compare_cmd->add_option("--seed", seed, "Master seed (overrides config)");
    compare_cmd->add_option("--out", out, "Output directory");
    compare_cmd->add_option("--threads", threads, "Worker threads (0 = hardware)");
    compare_cmd->add_flag("--trace", trace, "Write per-run trajectories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", "Usage"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }

    try {
        ScenarioConfig sc = load_scenario(config);
        if (runs > 0) sc.runs = runs;
        for (auto* cmd : {simulate_cmd, compare_cmd})
            if (cmd->count("--seed")) sc.seed = seed;

        if (*validate_cmd) {
            std::cout << json{{"status", "ok"},
                              {"nodes", sc.network.topology().node_count},
                              {"edges", sc.network.edge_count()},
                              {"period", sc.network.schedule().period()}}
                             .dump()
                      << "\n";
        } else if (*predict_cmd) {
            ensure_dir(out);
            write_predictions(sc, horizon, out);
        } else if (*simulate_cmd) {
            ensure_dir(out);
            const auto kind = parse_controller(controller);
            const auto report = monte_carlo(sc, {kind}, threads);
            write_reports(report, out);
            if (sc.mode == NetworkMode::Scripted) write_predictions(sc, sc.trace_horizon, out);
            if (trace) write_trace(sc, kind, join(out, "trace.csv"));
            print_summary(report);
        } else if (*compare_cmd) {
            ensure_dir(out);
            const std::vector<ControllerKind> kinds{ControllerKind::Fpd, ControllerKind::Iid, ControllerKind::On};
            const auto report = monte_carlo(sc, kinds, threads);
            write_reports(report, out);
            if (sc.mode == NetworkMode::Scripted) write_predictions(sc, sc.trace_horizon, out);
            if (trace)
                for (auto kind : kinds) write_trace(sc, kind, join(out, "trace_" + to_string(kind) + ".csv"));
            print_summary(report);
        }
    } catch (const Error& e) {
        std::cerr << json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    }
    return 0;
}
